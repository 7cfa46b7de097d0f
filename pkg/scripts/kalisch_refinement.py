"""Relative eigen-residual of the cell-indicator eigenvectors across grid refinements."""
import argparse
import math

import numpy as np

from gaussmix.operators import KalischSpec, kalisch, kalisch_eigenvector, relative_eigen_residual


def main(grids: list[int], n_t: int) -> None:
    ts = np.linspace(0.3, 2 * math.pi - 0.3, n_t)
    print("M      h          max residual   max residual/h")
    for M in grids:
        spec = KalischSpec(M)
        op = kalisch(spec)
        res = [relative_eigen_residual(op, kalisch_eigenvector(spec, t).vector, np.exp(1j * t)) for t in ts]
        print(f"{M:<6d} {spec.h:.3e}  {max(res):.4e}     {max(res) / spec.h:.4f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grids", type=int, nargs="+", default=[512, 1024, 2048, 4096, 8192])
    p.add_argument("--n-t", type=int, default=10)
    a = p.parse_args()
    main(a.grids, a.n_t)
