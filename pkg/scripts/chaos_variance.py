"""Compare standard errors of the plain, phase-averaged and phase+orbit-averaged
Hermite chaos estimators on the shift Gaussian measure."""
import argparse
import math

from gaussmix.eigenfield import uniform_shift_field
from gaussmix.experiments import chaos_pairs
from gaussmix.gaussian import GammaOperator, hermite_chaos_check
from gaussmix.operators import ShiftSpec, weighted_shift


def main(mc: int, seed: int, nodes: int) -> None:
    spec = ShiftSpec.constant(2.0, 32)
    op = weighted_shift(spec)
    K = GammaOperator.from_field(uniform_shift_field(spec, nodes))
    tol = 5 / math.sqrt(mc)
    variants = {"plain": dict(), "phase": dict(phase_average=True),
                "phase+orbit": dict(phase_average=True, op=op, orbit_shifts=8)}
    print(f"tolerance 5/sqrt(MC) = {tol:.4f}")
    print("k  inner  estimator     lhs       err_vs_exact  se")
    for k in (2, 3):
        for rho, (u, v) in chaos_pairs(32, 2.0).items():
            for name, kw in variants.items():
                r = hermite_chaos_check(K, k, u, v, mc, seed=seed, stream=k, **kw)
                print(f"{k}  {rho:4.1f}   {name:12s} {r.lhs:9.5f}  {r.err_vs_exact:11.5f}  {r.std_error:.5f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mc", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--nodes", type=int, default=64)
    a = p.parse_args()
    main(a.mc, a.seed, a.nodes)
