"""Finite-rank Gaussian measures: sampling, Fourier transform, invariance and chaos checks.

A ``GammaOperator`` is an N x M matrix K. The measure mu_K is the law of
xi = sum_m g_m K e_m with independent standard complex Gaussians g_m
(real and imaginary parts N(0, 1/2)). Its Fourier transform at a functional
x* is exp(-|K* x*|^2 / 4) with the convention int exp(-i Re<x*, x>) dmu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import eval_hermitenorm

from .eigenfield import EigenField
from .operators import TruncatedOperator

BLOCK = 1024
MAX_CHAOS_DEGREE = 6


@dataclass(frozen=True)
class GammaOperator:
    matrix: np.ndarray
    label: str = "explicit"

    def __post_init__(self):
        K = np.asarray(self.matrix, complex)
        if K.ndim != 2:
            raise ValueError("K must be a matrix")
        if not np.all(np.isfinite(K)):
            raise ValueError("K has non-finite entries")
        object.__setattr__(self, "matrix", K)

    @classmethod
    def from_field(cls, field_: EigenField) -> "GammaOperator":
        return cls(field_.gamma_matrix(), f"eigenfield:{field_.operator_ref}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def column_norm_sum(self) -> float:
        """sum_m ||K e_m||, the summability diagnostic for radonification."""
        return float(np.sum(np.linalg.norm(self.matrix, axis=0)))

    def adjoint(self, xstar) -> np.ndarray:
        """(K* x*)_m = conj(<x*, K e_m>); accepts stacked functionals."""
        return np.conj(np.asarray(xstar, complex) @ self.matrix)

    def adjoint_norm(self, xstar) -> np.ndarray | float:
        out = np.linalg.norm(self.adjoint(xstar), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, alpha: complex) -> "GammaOperator":
        return GammaOperator(alpha * self.matrix, self.label)


def measure_fourier(K: GammaOperator, xstar) -> float:
    return float(math.exp(-0.25 * K.adjoint_norm(xstar) ** 2))


# -- sampling ------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSampler:
    """Counter-based sampler: draw i lives in block i // BLOCK of a Philox
    stream keyed by (seed, stream), so any (seed, stream, index) is
    reproducible and workers can read disjoint index ranges."""

    K: GammaOperator
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** 64 and 0 <= self.stream < 2 ** 64):
            raise ValueError("seed and stream must be 64-bit unsigned")

    def _block(self, b: int) -> np.ndarray:
        bg = np.random.Philox(key=self.seed + (self.stream << 64), counter=[0, 0, b, 0])
        rng = np.random.Generator(bg)
        shape = (BLOCK, self.K.rank)
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)

    def coefficients(self, count: int, start: int = 0) -> np.ndarray:
        """Standard complex Gaussian coefficient rows g for draws start..start+count-1."""
        if count < 1:
            raise ValueError("count must be >= 1")
        out = np.empty((count, self.K.rank), complex)
        i = start
        while i < start + count:
            b, off = divmod(i, BLOCK)
            take = min(BLOCK - off, start + count - i)
            out[i - start:i - start + take] = self._block(b)[off:off + take]
            i += take
        return out

    def _map_blocks(self, mat: np.ndarray, count: int, start: int) -> np.ndarray:
        # process one block at a time so memory stays O(BLOCK * rank)
        out = np.empty((count, mat.shape[1]), complex)
        i = start
        while i < start + count:
            b, off = divmod(i, BLOCK)
            take = min(BLOCK - off, start + count - i)
            out[i - start:i - start + take] = self._block(b)[off:off + take] @ mat
            i += take
        return out

    def sample(self, count: int, start: int = 0) -> np.ndarray:
        """Rows xi = sum_m g_m K e_m."""
        if count < 1:
            raise ValueError("count must be >= 1")
        return self._map_blocks(self.K.matrix.T, count, start)

    def functionals(self, rows, count: int, start: int = 0) -> np.ndarray:
        """Values <r, xi> for each functional row r, without forming xi."""
        rows = np.atleast_2d(np.asarray(rows, complex))
        return self._map_blocks((rows @ self.K.matrix).T, count, start)

    def spawn(self, i: int) -> "GaussianSampler":
        """Independent child stream."""
        child = np.random.SeedSequence([self.seed, self.stream, i + 1]).generate_state(1, np.uint64)[0]
        return GaussianSampler(self.K, self.seed, int(child))

    def to_csv(self, count: int, start: int = 0) -> str:
        xs = self.sample(count, start)
        header = ",".join(f"re{k},im{k}" for k in range(xs.shape[1]))
        lines = [header]
        for x in xs:
            lines.append(",".join(f"{z.real!r},{z.imag!r}" for z in x))
        return "\n".join(lines) + "\n"


def compensated_mean(values) -> complex | float:
    v = np.asarray(values).ravel()
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real), math.fsum(v.imag)) / v.size
    return math.fsum(v) / v.size


# -- invariance ----------------------------------------------------------------------

def invariance_defect(op: TruncatedOperator, K: GammaOperator, probes=None) -> float:
    """max over probes of | ||K* x*|| - ||K* T* x*|| |.

    Default probes are the canonical functionals on which the operator's
    functional adjoint is exact.
    """
    if op.dim != K.dim:
        raise ValueError("operator and K dimensions differ")
    P = np.eye(op.dim)[:op.exact_probes] if probes is None else np.atleast_2d(probes)
    lhs = K.adjoint_norm(P)
    rhs = K.adjoint_norm(op.functional_adjoint(P))
    return float(np.max(np.abs(np.atleast_1d(lhs) - np.atleast_1d(rhs))))


# -- Wiener chaos --------------------------------------------------------------------

def hermite_normalized(k: int, x) -> np.ndarray:
    """He_k(x) / sqrt(k!), orthonormal for the standard real Gaussian."""
    return eval_hermitenorm(k, x) / math.sqrt(math.factorial(k))


@dataclass
class ChaosResult:
    lhs: float
    rhs: float
    abs_err: float
    exact_inner: float
    mc_inner: float
    norm_u: float
    norm_v: float
    std_error: float
    k: int
    mc: int
    seed: int
    stream: int
    phase_points: int = 1
    orbit_shifts: int = 1

    @property
    def exact_rhs(self) -> float:
        return self.exact_inner ** self.k

    @property
    def err_vs_exact(self) -> float:
        return abs(self.lhs - self.exact_rhs)


def hermite_chaos_check(K: GammaOperator, k: int, ustar, vstar, mc: int, seed: int = 0,
                        stream: int = 0, phase_average: bool = False,
                        op: TruncatedOperator | None = None, orbit_shifts: int = 1
                        ) -> ChaosResult:
    """Monte Carlo check of E[h_k(u) h_k(v)] = <u, v>^k for u = Re<u*, .>, v = Re<v*, .>.

    u and v are scaled to unit L2(mu) norm using the exact variance
    |K* u*|^2 / 2; the factors are reported as ``norm_u``, ``norm_v``.

    Optional unbiased variance reductions, both relying on invariances of mu:
    ``phase_average`` averages each draw over 2k+1 equispaced rotations
    exp(i a) xi, which is exact for the degree-2k trigonometric polynomial in a;
    ``orbit_shifts`` > 1 averages the pair (u o T^n, v o T^n) over n < orbit_shifts
    and requires ``op``.
    """
    if k < 1 or k > MAX_CHAOS_DEGREE:
        raise ValueError(f"chaos degree must be in 1..{MAX_CHAOS_DEGREE}")
    if mc < 1:
        raise ValueError("mc must be >= 1")
    u = np.asarray(ustar, complex)
    v = np.asarray(vstar, complex)
    nu = K.adjoint_norm(u) / math.sqrt(2.0)
    nv = K.adjoint_norm(v) / math.sqrt(2.0)
    if nu == 0 or nv == 0:
        raise ValueError("functional has zero variance under mu")
    exact = float(np.real(np.vdot(K.adjoint(v), K.adjoint(u)))) / (2 * nu * nv)

    rows_u, rows_v = [u], [v]
    if orbit_shifts > 1:
        if op is None:
            raise ValueError("orbit averaging needs the operator")
        for _ in range(orbit_shifts - 1):
            rows_u.append(op.functional_adjoint(rows_u[-1]))
            rows_v.append(op.functional_adjoint(rows_v[-1]))
    rows = np.vstack(rows_u + rows_v)
    sampler = GaussianSampler(K, seed, stream)
    vals = sampler.functionals(rows, mc)
    a = vals[:, :orbit_shifts] / nu
    b = vals[:, orbit_shifts:] / nv

    n_phase = 2 * k + 1 if phase_average else 1
    rot = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    acc = np.zeros(mc)
    acc1 = np.zeros(mc)
    for r in rot:
        x = np.real(r * a)
        y = np.real(r * b)
        acc += np.mean(hermite_normalized(k, x) * hermite_normalized(k, y), axis=1)
        acc1 += np.mean(x * y, axis=1)
    per_draw = acc / n_phase
    lhs = compensated_mean(per_draw)
    mc_inner = compensated_mean(acc1 / n_phase)
    rhs = mc_inner ** k
    se = float(np.std(per_draw, ddof=1) / math.sqrt(mc)) if mc > 1 else math.inf
    return ChaosResult(lhs, rhs, abs(lhs - rhs), exact, mc_inner, nu, nv, se, k, mc,
                       seed, stream, n_phase, orbit_shifts)


# -- rotation invariance -------------------------------------------------------------

@dataclass
class EnergyTest:
    statistic: float
    p_value: float
    permutations: int

    def passes(self, level: float) -> bool:
        return self.p_value > level


def energy_distance_test(x, y, permutations: int = 199, seed: int = 0,
                         chunk: int = 1024) -> EnergyTest:
    """Two-sample energy-distance permutation test on real or complex samples.

    Pooled pairwise distances are streamed in row chunks and contracted against
    all permutation labels at once, so the full distance matrix is never stored.
    """
    def real_rows(z):
        z = np.asarray(z)
        z = z.reshape(z.shape[0], -1)
        return np.hstack([z.real, z.imag]) if np.iscomplexobj(z) else z.astype(float)

    X, Y = real_rows(x), real_rows(y)
    pooled = np.vstack([X, Y])
    n, m = X.shape[0], Y.shape[0]
    tot = n + m
    rng = np.random.default_rng(seed)
    labels = np.zeros((tot, permutations + 1), np.float64)
    labels[:n, 0] = 1.0
    for p in range(1, permutations + 1):
        labels[rng.permutation(tot)[:n], p] = 1.0
    row_sums = np.zeros(tot)
    DA = np.zeros((tot, permutations + 1))
    for s in range(0, tot, chunk):
        D = cdist(pooled[s:s + chunk], pooled)
        row_sums[s:s + chunk] = D.sum(axis=1)
        DA[s:s + chunk] = D @ labels
    total = row_sums.sum()
    aDa = np.einsum("ip,ip->p", labels, DA)
    ar = labels.T @ row_sums
    s_xx = aDa
    s_xy = ar - aDa
    s_yy = total - 2 * ar + aDa
    stat = 2 * s_xy / (n * m) - s_xx / n ** 2 - s_yy / m ** 2
    p_value = (1 + np.sum(stat[1:] >= stat[0])) / (permutations + 1)
    return EnergyTest(float(stat[0]), float(p_value), permutations)


def rotation_invariance_test(sampler: GaussianSampler, draws: int, angle: float,
                             functional=None, permutations: int = 199) -> EnergyTest:
    """Compare xi with exp(i angle) xi' on independent halves of ``draws``.

    With ``functional`` given the test runs on the scalar <x*, xi>; otherwise on
    the full vectors.
    """
    half = draws // 2
    if functional is None:
        first = sampler.sample(half, 0)
        second = sampler.sample(half, half)
    else:
        first = sampler.functionals(functional, half, 0)
        second = sampler.functionals(functional, half, half)
    return energy_distance_test(first, np.exp(1j * angle) * second, permutations,
                                seed=sampler.seed)
