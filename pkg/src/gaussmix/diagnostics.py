"""Spectral coefficients, mixing verdicts, Monte Carlo correlations, orbit statistics.

The L2(mu) observable attached to a functional x* is xi -> conj(<x*, xi>).
With this choice its correlation sequence is

    sigma_hat(n) = E[conj(<x*, T^n xi>) <y*, xi>] = <K* T*^n x*, K* y*>

where <f, g> = sum f conj(g) on coefficient space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .circle import (INCONCLUSIVE, NOT_S_CONTINUOUS, S_CONTINUOUS, MixingFamily, Verdict,
                     classify_sequence)
from .gaussian import GammaOperator, GaussianSampler, compensated_mean
from .operators import TruncatedOperator

NORM_GROWTH_LIMIT = 1e12
OVERFLOW_LIMIT = 1e300
# first dyadic checkpoint entering the lower-density proxy
LOWER_PROXY_START = 64


class NumericalGuardError(RuntimeError):
    """A numerical guard tripped; ``guard`` names it."""

    def __init__(self, guard: str, message: str):
        super().__init__(f"{guard}: {message}")
        self.guard = guard


class FunctionalOperator(Protocol):
    def functional_adjoint(self, xs) -> np.ndarray: ...


# -- spectral traces -----------------------------------------------------------------

@dataclass
class SpectralTrace:
    coefficients: np.ndarray
    bound: float
    method: str
    provenance: dict = field(default_factory=dict)
    truncated_at: int | None = None
    std_error: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.coefficients.size

    def respects_bound(self, rtol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(self.coefficients) <= self.bound * (1 + rtol) + 1e-300))

    def to_csv(self) -> str:
        lines = ["n,re,im,abs"]
        for n, c in enumerate(self.coefficients):
            lines.append(f"{n},{c.real!r},{c.imag!r},{abs(c)!r}")
        return "\n".join(lines) + "\n"


def functional_orbit(op: FunctionalOperator, xstar, horizon: int) -> tuple[np.ndarray, int | None]:
    """Rows T*^n x* for n < horizon, stopping early if the norm grows past the guard."""
    x = np.asarray(xstar, complex)
    n0 = np.linalg.norm(x)
    rows = np.zeros((horizon, x.size), complex)
    stop = None
    for n in range(horizon):
        if n0 > 0 and np.linalg.norm(x) > NORM_GROWTH_LIMIT * n0:
            stop = n
            break
        rows[n] = x
        x = op.functional_adjoint(x)
    return rows, stop


def spectral_coeffs(op: FunctionalOperator, K: GammaOperator, xstar, ystar, horizon: int,
                    ) -> SpectralTrace:
    """sigma_hat(n) = <K* T*^n x*, K* y*> for n < horizon by iterating the adjoint."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rows, stop = functional_orbit(op, xstar, horizon)
    if stop is not None:
        warnings.warn(f"adjoint orbit norm grew past {NORM_GROWTH_LIMIT:g}; trace truncated at n={stop}")
        rows = rows[:stop]
    ky = K.adjoint(ystar)
    coeffs = K.adjoint(rows) @ np.conj(ky)
    bound = K.adjoint_norm(xstar) * K.adjoint_norm(ystar)
    return SpectralTrace(coeffs, float(bound), "exact-quadrature",
                         {"operator": getattr(op, "label", type(op).__name__), "K": K.label},
                         truncated_at=stop)


def spectral_coeffs_mc(op: TruncatedOperator, sampler: GaussianSampler, xstar, ystar,
                       horizon: int, mc: int) -> SpectralTrace:
    """Monte Carlo estimate of the same coefficients from samples of mu_K."""
    rows, stop = functional_orbit(op, xstar, horizon)
    if stop is not None:
        rows = rows[:stop]
    vals_x = sampler.functionals(rows, mc)  # <T*^n x*, xi> = <x*, T^n xi>
    vals_y = sampler.functionals(np.asarray(ystar, complex)[None, :], mc)[:, 0]
    prod = np.conj(vals_x) * vals_y[:, None]
    coeffs = np.array([compensated_mean(prod[:, n]) for n in range(prod.shape[1])])
    se = np.std(prod, axis=0, ddof=1) / math.sqrt(mc)
    K = sampler.K
    bound = K.adjoint_norm(xstar) * K.adjoint_norm(ystar)
    return SpectralTrace(coeffs, float(bound), "monte-carlo",
                         {"operator": op.label, "K": K.label, "seed": sampler.seed,
                          "stream": sampler.stream, "count": mc},
                         truncated_at=stop, std_error=se)


def default_probes(dim: int, seed: int = 0, n_random: int = 8) -> np.ndarray:
    """Canonical functionals e_0*..e_{min(8, N-2)}* plus seeded random unit functionals."""
    canon = np.eye(dim)[:min(8, dim - 2) + 1] if dim >= 2 else np.eye(dim)
    rng = np.random.default_rng(seed)
    rnd = rng.standard_normal((n_random, dim)) + 1j * rng.standard_normal((n_random, dim))
    rnd /= np.linalg.norm(rnd, axis=1, keepdims=True)
    return np.vstack([canon.astype(complex), rnd])


# -- verdicts ------------------------------------------------------------------------

_SEVERITY = {S_CONTINUOUS: 0, INCONCLUSIVE: 1, NOT_S_CONTINUOUS: 2}


@dataclass
class MixingReport:
    verdict: str
    family: str
    worst_pair: tuple[int, int] | None
    worst: Verdict | None
    verdicts: dict = field(default_factory=dict, repr=False)

    def summary(self) -> dict:
        out = {"verdict": self.verdict, "family": self.family,
               "worst_pair": list(self.worst_pair) if self.worst_pair else None}
        if self.worst is not None:
            out["worst_tail_max"] = {"value": self.worst.tail_max, "tol": self.worst.tol}
        return out


def mixing_report(traces: SpectralTrace | dict | Sequence[SpectralTrace], family: MixingFamily,
                  tol: float) -> MixingReport:
    """Classify each trace and report the worst probe pair.

    ``traces`` may be a single trace, a sequence, or a dict keyed by (i, j).
    Worst means most severe verdict, ties broken by the largest tail max.
    """
    if isinstance(traces, SpectralTrace):
        traces = {(0, 0): traces}
    elif not isinstance(traces, dict):
        traces = {(i, 0): t for i, t in enumerate(traces)}
    verdicts = {key: classify_sequence(tr.coefficients, family, tol) for key, tr in traces.items()}
    if not verdicts:
        return MixingReport(S_CONTINUOUS, family.kind, None, None, {})
    key = max(verdicts, key=lambda k: (_SEVERITY[verdicts[k].verdict], verdicts[k].tail_max))
    return MixingReport(verdicts[key].verdict, family.kind, key, verdicts[key], verdicts)


def probe_traces(op: FunctionalOperator, K: GammaOperator, probes: np.ndarray, horizon: int
                 ) -> dict:
    """Traces for every ordered pair of probe functionals."""
    probes = np.atleast_2d(probes)
    out = {}
    ky = K.adjoint(probes)
    for i, x in enumerate(probes):
        rows, stop = functional_orbit(op, x, horizon)
        if stop is not None:
            rows = rows[:stop]
        kx = K.adjoint(rows)
        block = kx @ np.conj(ky).T
        nx = K.adjoint_norm(x)
        for j in range(probes.shape[0]):
            out[(i, j)] = SpectralTrace(block[:, j], float(nx * np.linalg.norm(ky[j])),
                                        "exact-quadrature", {"pair": [i, j]}, stop)
    return out


def operator_mixing_report(op: FunctionalOperator, K: GammaOperator, family: MixingFamily,
                           horizon: int, tol: float, probes=None) -> MixingReport:
    if probes is None:
        probes = default_probes(K.dim)
    return mixing_report(probe_traces(op, K, probes, horizon), family, tol)


# -- set correlations ----------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: np.ndarray | None = None
    radius: float = 1.0
    norm: str = "2"

    def contains(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        d = xs if self.center is None else xs - np.asarray(self.center, complex)
        if self.norm == "2":
            r = np.linalg.norm(d, axis=1)
        elif self.norm == "1":
            r = np.sum(np.abs(d), axis=1)
        elif self.norm in ("inf", "c0"):
            r = np.max(np.abs(d), axis=1)
        elif self.norm == "all":
            return np.ones(xs.shape[0], bool)
        else:
            raise ValueError(f"unknown norm {self.norm!r}")
        return r < self.radius

    @classmethod
    def everything(cls) -> "Ball":
        return cls(None, math.inf, "all")


@dataclass
class CorrelationEstimate:
    estimate: float
    std_error: float
    p_joint: float
    p_a: float
    p_b: float
    n: int
    mc: int
    seed: int
    stream: int

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.estimate - value) <= k * self.std_error

    def summary(self) -> dict:
        return {"n": self.n, "estimate": {"value": self.estimate, "se": self.std_error},
                "p_joint": {"value": self.p_joint, "se": _bern_se(self.p_joint, self.mc)},
                "p_a": {"value": self.p_a, "se": _bern_se(self.p_a, self.mc)},
                "p_b": {"value": self.p_b, "se": _bern_se(self.p_b, self.mc)},
                "mc": self.mc, "seed": self.seed, "stream": self.stream}


def _bern_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def _indicator_mean(sampler: GaussianSampler, ball: Ball, mc: int, transform=None) -> float:
    hits = 0
    for start in range(0, mc, 8192):
        xs = sampler.sample(min(8192, mc - start), start)
        if transform is not None:
            xs = xs @ transform.T
        hits += int(np.count_nonzero(ball.contains(xs)))
    return hits / mc


def set_correlation(op: TruncatedOperator, sampler: GaussianSampler, A: Ball, B: Ball, n: int,
                    mc: int) -> CorrelationEstimate:
    """mu(A & T^-n B) - mu(A) mu(B) by Monte Carlo.

    The joint term uses the sampler's own stream; mu(A) and mu(B) use two
    spawned independent streams. The standard error is the delta-method
    combination of the three binomial variances.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if mc < 100:
        raise ValueError("need at least 100 Monte Carlo draws")
    Tn = op.power(n)
    hits = 0
    for start in range(0, mc, 8192):
        xs = sampler.sample(min(8192, mc - start), start)
        hits += int(np.count_nonzero(A.contains(xs) & B.contains(xs @ Tn.T)))
    p_joint = hits / mc
    p_a = _indicator_mean(sampler.spawn(0), A, mc)
    p_b = _indicator_mean(sampler.spawn(1), B, mc)
    var = (p_joint * (1 - p_joint) + p_b ** 2 * p_a * (1 - p_a) + p_a ** 2 * p_b * (1 - p_b)) / mc
    return CorrelationEstimate(p_joint - p_a * p_b, math.sqrt(var), p_joint, p_a, p_b, n, mc,
                               sampler.seed, sampler.stream)


# -- Birkhoff visit densities ----------------------------------------------------------

@dataclass
class BirkhoffResult:
    density: float
    lower_proxy: float
    visits: int
    reached: int
    truncated: bool
    checkpoints: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"density": {"value": self.density, "se": _bern_se(self.density, max(self.reached, 1))},
                "lower_density_proxy": {"value": self.lower_proxy, "tol": 0.0},
                "reached": self.reached, "truncated": self.truncated}


def _dyadic_summary(hits: np.ndarray, reached: int, truncated: bool) -> BirkhoffResult:
    cum = np.cumsum(hits)
    checkpoints = []
    k = 1
    while k <= reached:
        checkpoints.append((k, float(cum[k - 1] / k)))
        k *= 2
    if reached and (not checkpoints or checkpoints[-1][0] != reached):
        checkpoints.append((reached, float(cum[reached - 1] / reached)))
    density = float(cum[reached - 1] / reached) if reached else 0.0
    # lower density is a liminf, so early checkpoints are skipped
    tail = [d for k, d in checkpoints if k >= min(LOWER_PROXY_START, reached)]
    lower = min(tail) if tail else 0.0
    return BirkhoffResult(density, lower, int(cum[reached - 1]) if reached else 0, reached,
                          truncated, checkpoints)


def birkhoff_density(op: TruncatedOperator, x0, ball: Ball, horizon: int) -> BirkhoffResult:
    """Fraction of n < horizon with T^n x0 in the ball, plus dyadic partial densities."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    x = np.asarray(x0, complex)
    hits = np.zeros(horizon, bool)
    reached = horizon
    truncated = False
    for n in range(horizon):
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > OVERFLOW_LIMIT:
            reached, truncated = n, True
            break
        hits[n] = ball.contains(x)[0]
        x = op.apply(x)
    return _dyadic_summary(hits, reached, truncated)


def shift_orbit_density(weights: Callable[[np.ndarray], np.ndarray] | complex, y: np.ndarray,
                        ball: Ball, horizon: int, window: int = 40) -> BirkhoffResult:
    """Birkhoff density for a backward shift orbit given renormalized coordinates.

    The orbit point is described by y_k = (w_1...w_k) x_k, so that
    (T^n x)_k = y_{k+n} / (w_{n+1}...w_{n+k}). Only the first ``window``
    coordinates of each orbit point are compared against the ball; for
    weights of modulus > 1 the neglected tail is below the last window weight.
    ``weights`` is either a constant or a function of the index array k >= 1.
    """
    y = np.asarray(y, complex)
    if y.size < horizon + window:
        raise ValueError("need horizon + window renormalized coordinates")
    if np.isscalar(weights) or np.ndim(weights) == 0:
        w_const = complex(weights)
        scale = lambda n: w_const ** -np.arange(window)  # noqa: E731
    else:
        logs = np.concatenate([[0.0 + 0j], np.cumsum(np.log(np.asarray(
            weights(np.arange(1, horizon + window)), complex)))])

        def scale(n):
            return np.exp(-(logs[n:n + window] - logs[n]))
    hits = np.zeros(horizon, bool)
    step = 2048
    if np.isscalar(weights) or np.ndim(weights) == 0:
        s = scale(0)
        idx = np.arange(window)
        for start in range(0, horizon, step):
            ns = np.arange(start, min(start + step, horizon))
            pts = y[ns[:, None] + idx[None, :]] * s[None, :]
            hits[ns] = ball.contains(pts)
    else:
        for n in range(horizon):
            hits[n] = ball.contains(y[n:n + window] * scale(n))[0]
    return _dyadic_summary(hits, horizon, False)


# -- Haar-null probe criterion -------------------------------------------------------

SUMMABLE = "summable-at-horizon"
NOT_SUMMABLE = "not-summable-at-horizon"
INAPPLICABLE = "inapplicable"


@dataclass
class HaarNullResult:
    partial_sums: np.ndarray
    verdict: str
    tail_increment: float
    tail_tol: float
    first_zero: int | None = None

    def summary(self) -> dict:
        return {"verdict": self.verdict,
                "tail_increment": {"value": self.tail_increment, "tol": self.tail_tol},
                "first_zero": self.first_zero}

    def to_csv(self) -> str:
        lines = ["k,S_k"]
        for k, s in enumerate(self.partial_sums, start=1):
            lines.append(f"{k},{s!r}")
        return "\n".join(lines) + "\n"


def probe_vector(spec_weights: np.ndarray, p: float) -> np.ndarray:
    """u_k = 1 / |w_0 ... w_k|^{1/(p+1)} with w_0 = 1."""
    w = np.concatenate([[1.0], np.abs(np.asarray(spec_weights))])
    return np.exp(-np.cumsum(np.log(w)) / (p + 1.0)).astype(complex)


def haar_null_check(op: TruncatedOperator, u, n_terms: int, tail_tol: float = 1e-3,
                    norm: str = "2", zero_tol: float = 1e-300) -> HaarNullResult:
    """Partial sums S_k = sum_{n<k} 1/||T^n u|| for k = 1..n_terms.

    Verdict is summable iff S_N - S_{N/2} < tail_tol; an orbit reaching
    numerical zero makes the criterion inapplicable at that index.
    """
    if n_terms < 2:
        raise ValueError("need at least two terms")
    ord_ = {"1": 1, "2": 2, "inf": np.inf, "c0": np.inf}[norm]
    x = np.asarray(u, complex)
    terms = np.zeros(n_terms)
    for n in range(n_terms):
        nrm = np.linalg.norm(x, ord_)
        if not nrm > zero_tol:
            return HaarNullResult(np.cumsum(terms[:n]), INAPPLICABLE, math.nan, tail_tol, n)
        terms[n] = 1.0 / nrm
        x = op.apply(x)
    sums = np.cumsum(terms)
    inc = float(sums[n_terms - 1] - sums[n_terms // 2 - 1])
    verdict = SUMMABLE if inc < tail_tol else NOT_SUMMABLE
    return HaarNullResult(sums, verdict, inc, tail_tol)
