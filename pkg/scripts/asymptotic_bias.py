"""Noise-free bias of the a(j) and K(j) inversions.

Feeds the exact expectations K * Q_j (incomplete-gamma form, no mice, no
sampling noise) through the asymptotic estimators, showing how far a(j)
and K(j) sit from the truth when p_s * b_min is not small.

    python3 scripts/asymptotic_bias.py --a 1.85 --bmin 20 --rates 0.01 0.001
"""

import argparse

from elephants.estimator import ParetoSpec, a_of_j, infer_bmin, k_of_j, q_j_exact


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--a", type=float, default=1.85)
    p.add_argument("--bmin", type=int, default=20)
    p.add_argument("--k", type=float, default=1000.0)
    p.add_argument("--rates", type=float, nargs="+", default=[0.01, 0.001])
    p.add_argument("--j-max", type=int, default=6)
    args = p.parse_args()

    print("p_s\tj\tE(W_j)\ta(j)\tb_min_hat\tK(j)\tK_exp\terror")
    for p_s in args.rates:
        spec = ParetoSpec(args.a, args.bmin, p_s)
        ew = {j: args.k * q_j_exact(spec, j) for j in range(1, args.j_max + 2)}
        for j in range(2, args.j_max + 1):
            a_hat = a_of_j(ew[j], ew[j + 1], j)
            b_hat = infer_bmin(j, p_s)
            k_hat = k_of_j(ew[j], a_hat, b_hat, p_s, j)
            k_exp = args.k * min(1.0, (args.bmin / b_hat) ** args.a)
            print(f"{p_s}\t{j}\t{ew[j]:.3f}\t{a_hat:.3f}\t{b_hat}\t{k_hat:.1f}\t{k_exp:.1f}\t{k_hat / k_exp - 1:+.3f}")


if __name__ == "__main__":
    main()
