"""Command-line front end.

Exit codes: 0 success (possibly with ``qualified: false``), 1 data or
analysis failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import jsonio
from .characterize import DEFAULT_DELTAS, characterize_trace, write_ccdf_tsv
from .inference import W2_BAND, choose_delta_sampled, infer, observables, sampled_windows
from .sampling import SamplingConfig, sample, sampled_header
from .synth import SynthConfig, generate_trace, load_truth
from .trace import TraceParseError, read_trace, write_trace


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    """Every module knob, with module defaults; round-trips through JSON."""

    # synth
    elephants: int = 1000
    a: float = 1.85
    bmin: int = 20
    mice: int = 0
    mouse_max: int = 1
    window_span: float = 5.0
    windows: int = 1
    # sampling
    kappa: int = 100
    phase: int | None = None
    mode: str = "deterministic"
    # characterize
    deltas: list[float] = field(default_factory=lambda: list(DEFAULT_DELTAS))
    prefix: float = 120.0
    residual_threshold: float = 2e-3
    bmax_fraction: float = 0.05
    min_support: int = 5
    # infer
    j_max: int = 20
    w2_band: list[float] = field(default_factory=lambda: list(W2_BAND))
    origin: float = 0.0
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> RunConfig:
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config {path}: {exc}") from None
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        return cls.from_json(doc)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_elephants=self.elephants,
            shape_a=self.a,
            b_min=self.bmin,
            n_mice=self.mice,
            mouse_max=self.mouse_max,
            window_span=self.window_span,
            n_windows=self.windows,
            seed=self.seed,
        )

    def sampling_config(self) -> SamplingConfig:
        return SamplingConfig(kappa=self.kappa, phase=self.phase, mode=self.mode, seed=self.seed)


# flag name -> RunConfig field
_FLAGS = {
    "elephants": ("--elephants", int),
    "a": ("--a", float),
    "bmin": ("--bmin", int),
    "mice": ("--mice", int),
    "mouse_max": ("--mouse-max", int),
    "window_span": ("--window-span", float),
    "windows": ("--windows", int),
    "kappa": ("--kappa", int),
    "phase": ("--phase", int),
    "mode": ("--mode", str),
    "prefix": ("--prefix", float),
    "residual_threshold": ("--residual-threshold", float),
    "bmax_fraction": ("--bmax-fraction", float),
    "min_support": ("--min-support", int),
    "j_max": ("--j-max", int),
    "origin": ("--origin", float),
}

_SUBCOMMAND_FLAGS = {
    "synth": ["elephants", "a", "bmin", "mice", "mouse_max", "window_span", "windows"],
    "characterize": ["prefix", "residual_threshold", "bmax_fraction", "min_support", "origin"],
    "sample": ["kappa", "phase", "mode"],
    "observe": ["j_max", "origin"],
    "infer": ["kappa", "j_max", "origin"],
    "report": [],
}


def _deltas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}") from None
    if not vals or min(vals) <= 0:
        raise argparse.ArgumentTypeError("deltas must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elephants", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "generate a synthetic trace and its ground truth",
        "characterize": "fit the elephant Pareto law on an unsampled trace",
        "sample": "apply 1-out-of-kappa sampling to a trace",
        "observe": "tabulate E(W_j) for a sampled trace",
        "infer": "estimate a, B_min and K from a sampled trace",
        "report": "summarise result JSON files",
    }
    for name, flag_names in _SUBCOMMAND_FLAGS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON file with RunConfig knobs")
        p.add_argument("--seed", type=int)
        if name == "report":
            p.add_argument("--input", nargs="+", required=True)
        else:
            p.add_argument("--input", required=name != "synth")
        p.add_argument("--output")
        for key in flag_names:
            flag, typ = _FLAGS[key]
            p.add_argument(flag, dest=key, type=typ)
        if name in ("characterize", "observe", "infer"):
            p.add_argument("--deltas", type=_deltas, help="comma-separated window lengths (s)")
        if name == "synth":
            p.add_argument("--truth", help="ground-truth JSON path (default: <output>.truth.json)")
        if name == "characterize":
            p.add_argument("--plot", help="CCDF plot-data TSV path")
        if name == "observe":
            p.add_argument("--delta", type=float, help="window length; chosen from --deltas if omitted")
        if name == "infer":
            p.add_argument("--truth", help="ground-truth JSON from synth, for the error field")
            p.add_argument("--reference", help="unsampled trace, for exact K_exp and the Le Cam bound")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in _FLAGS if getattr(args, k, None) is not None}
    if getattr(args, "deltas", None) is not None:
        overrides["deltas"] = args.deltas
    if args.seed is not None:
        overrides["seed"] = args.seed
    return replace(cfg, **overrides)


def _load(path: str):
    try:
        trace, header = read_trace(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except (TraceParseError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None
    if len(trace) == 0:
        raise DataError(f"{path}: trace is empty")
    return trace, header


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args, cfg: RunConfig) -> int:
    try:
        scfg = cfg.synth_config()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.output:
        raise UsageError("synth needs --output")
    trace, truth = generate_trace(scfg)
    header = {"duration": repr(scfg.duration)}
    comment = "synth " + " ".join(f"{k}={v}" for k, v in asdict(scfg).items())
    write_trace(trace, args.output, header=header, comment=comment)
    truth.dump(args.truth or f"{args.output}.truth.json")
    return 0


def cmd_characterize(args, cfg: RunConfig) -> int:
    trace, _ = _load(args.input)
    result = characterize_trace(
        trace,
        cfg.deltas,
        prefix=cfg.prefix,
        residual_threshold=cfg.residual_threshold,
        bmax_fraction=cfg.bmax_fraction,
        min_support=cfg.min_support,
        origin=cfg.origin,
    )
    if args.plot:
        write_ccdf_tsv(result.ccdf, args.plot, result.fit)
    _emit(jsonio.dumps(result.to_json()), args.output)
    return 0


def cmd_sample(args, cfg: RunConfig) -> int:
    trace, header = _load(args.input)
    try:
        scfg = cfg.sampling_config()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.output:
        raise UsageError("sample needs --output")
    out = sample(trace, scfg)
    extra = {"duration": header["duration"]} if "duration" in header else None
    write_trace(out, args.output, header=extra, comment=sampled_header(scfg) + f" mode={scfg.mode.value}")
    return 0


def _kappa(args, cfg: RunConfig, header: dict) -> int:
    if args.kappa is not None:
        return args.kappa
    if "kappa" in header:
        return int(header["kappa"])
    raise UsageError("sampling rate unknown: no '# sampled kappa=' header and no --kappa")


def cmd_observe(args, cfg: RunConfig) -> int:
    trace, _ = _load(args.input)
    delta = args.delta
    if delta is None:
        delta = choose_delta_sampled(trace, cfg.deltas, tuple(cfg.w2_band), cfg.origin).delta
    elif delta <= 0:
        raise UsageError("--delta must be positive")
    series = observables(sampled_windows(trace, delta, cfg.origin), cfg.j_max)
    lines = [f"# delta={delta:g} n_windows={series.n_windows}", "j\tmean_w"]
    lines += [f"{j}\t{series.mean(j):.6f}" for j in range(1, series.j_max + 1)]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _k_from_truth(truth: dict, b: int, delta: float) -> float | None:
    ratio = delta / truth["window_span"]
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        return None
    n_ge = sum(c for size, c in truth["sizes_histogram"].items() if size >= b)
    return n_ge / truth["n_windows"] * round(ratio)


def cmd_infer(args, cfg: RunConfig) -> int:
    trace, header = _load(args.input)
    kappa = _kappa(args, cfg, header)
    if kappa < 2:
        raise UsageError("kappa must be >= 2 for inference")
    reference = _load(args.reference)[0] if args.reference else None
    result = infer(trace, 1.0 / kappa, cfg.deltas, cfg.j_max, cfg.origin, reference, tuple(cfg.w2_band))
    if args.truth and result.k_exp is None and result.b_min_hat is not None:
        try:
            truth = load_truth(args.truth)
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read truth {args.truth}: {exc}") from None
        result.k_exp = _k_from_truth(truth, result.b_min_hat, result.delta_used)
        if result.k_exp is None:
            result.notes.append("window length is not a multiple of the generation window; no K_exp")
    _emit(jsonio.dumps(result.to_json()), args.output)
    return 0


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if not math.isfinite(v) else f"{v:.4g}"
    return str(v)


def cmd_report(args, cfg: RunConfig) -> int:
    blocks = []
    for path in args.input:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read {path}: {exc}") from None
        kind = "inference" if "k_hat" in doc else "characterization" if "b_max" in doc else "document"
        rows = [f"== {path} ({kind})"]
        for key in sorted(doc):
            val = doc[key]
            if isinstance(val, (dict, list)):
                continue
            rows.append(f"  {key:<24} {_fmt(val)}")
        if kind == "inference" and doc.get("ew_table"):
            ew = doc["ew_table"]
            rows.append("  E(W_j): " + "  ".join(f"{j}:{_fmt(ew[j])}" for j in sorted(ew, key=int)[:10]))
        blocks.append("\n".join(rows))
    _emit("\n\n".join(blocks) + "\n", args.output)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "characterize": cmd_characterize,
    "sample": cmd_sample,
    "observe": cmd_observe,
    "infer": cmd_infer,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"elephants {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except TypeError as exc:  # bad value types in a config file
        print(f"elephants {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, ArithmeticError) as exc:
        print(f"elephants {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"elephants {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
