"""Elephant-flow characterization and inference from 1-out-of-kappa sampled traffic."""

from .characterize import (
    ParetoFit,
    SizeCcdf,
    characterize_trace,
    choose_bmax,
    choose_delta_full,
    empirical_ccdf,
    fit_pareto,
    negligibility_epsilon,
)
from .estimator import (
    ParetoSpec,
    a_of_j,
    infer_bmin,
    k_of_j,
    lecam_bound,
    q_j_asymptotic,
    q_j_exact,
)
from .inference import InferenceResult, ObservableSeries, choose_delta_sampled, choose_j, infer, observables
from .sampling import SamplingConfig, count_sampled_flows, deterministic_sample, multinomial_oracle
from .synth import GroundTruth, SynthConfig, draw_pareto_size, generate_trace
from .trace import FlowKey, PacketRecord, PacketTrace, WindowFlowTable, parse_packet_log, window_flows

__version__ = "0.1.0"
