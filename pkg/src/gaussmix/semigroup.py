"""Translation semigroups on weighted spaces of functions on the half line.

Functions are sampled on x_j = j h, j < M. The C0 space norm is
max_j |f(x_j) rho(x_j)|; the Lp variant uses (h sum |f rho|^p)^{1/p}.
Samples translated past the end of the grid are set to 0.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .circle import MixingFamily
from .diagnostics import MixingReport, NumericalGuardError, mixing_report, probe_traces
from .eigenfield import EigenField, arc_nodes
from .gaussian import GammaOperator

DEFAULT_GRID = 2 ** 14
DECAY_LENGTHS = 20
# grid proxy for rho -> 0: rho at the grid end below this fraction of max rho
DECAY_THRESHOLD = 0.05

BUILTIN_WEIGHTS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], float]] = {
    # name -> (rho, length over which rho drops by a factor e)
    "exp": (lambda x: np.exp(-x), 1.0),
    "inv1p": (lambda x: 1.0 / (1.0 + x), math.e - 1.0),
    "const": (lambda x: np.ones_like(x), 1.0),
}


class NonAdmissibleError(ValueError):
    pass


def default_step(decay_length: float, grid: int = DEFAULT_GRID) -> float:
    """Smallest power of two h with grid * h >= DECAY_LENGTHS * decay_length."""
    return 2.0 ** math.ceil(math.log2(DECAY_LENGTHS * decay_length / grid))


@dataclass(frozen=True)
class WeightedLine:
    h: float
    rho: np.ndarray
    space: str = "C0"
    p: float = 2.0
    name: str = "custom"

    def __post_init__(self):
        rho = np.asarray(self.rho, float).ravel()
        if rho.size < 2 or self.h <= 0:
            raise ValueError("need a positive step and at least two samples")
        if not np.all(np.isfinite(rho)):
            raise ValueError("weight must be finite on the grid")
        if np.any(rho <= 0):
            raise ValueError("weight samples must be positive")
        if self.space not in ("C0", "Lp"):
            raise ValueError("space must be 'C0' or 'Lp'")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def builtin(cls, name: str, grid: int = DEFAULT_GRID, h: float | None = None,
                space: str = "C0", p: float = 2.0) -> "WeightedLine":
        func, length = BUILTIN_WEIGHTS[name]
        step = default_step(length, grid) if h is None else h
        x = np.arange(grid) * step
        return cls(step, func(x), space, p, name)

    @classmethod
    def from_csv(cls, text: str, space: str = "C0", p: float = 2.0) -> "WeightedLine":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        x, rho = data[:, 0], data[:, 1]
        steps = np.diff(x)
        if x[0] != 0 or not np.allclose(steps, steps[0]):
            raise ValueError("CSV grid must start at 0 with a uniform step")
        return cls(float(steps[0]), rho, space, p, "csv")

    @property
    def size(self) -> int:
        return self.rho.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.size) * self.h

    @property
    def length(self) -> float:
        return (self.size - 1) * self.h

    def norm(self, f) -> float:
        g = np.abs(np.asarray(f)) * self.rho
        if self.space == "C0":
            return float(np.max(g))
        return float((self.h * np.sum(g ** self.p)) ** (1.0 / self.p))

    def steps_for(self, t: float) -> int | None:
        k = t / self.h
        r = round(k)
        return int(r) if abs(k - r) <= 1e-9 * max(1.0, abs(k)) else None

    def rho_at(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.x, self.rho)


@dataclass
class AdmissibilityTable:
    t: np.ndarray
    C: np.ndarray
    admissible: bool
    boundary_caveat: np.ndarray

    def summary(self) -> dict:
        return {"admissible": self.admissible,
                "C": [{"t": float(t), "value": float(c), "tol": 1e-6, "boundary_caveat": bool(b)}
                      for t, c, b in zip(self.t, self.C, self.boundary_caveat)]}


def admissibility(wl: WeightedLine, ts: Sequence[float]) -> AdmissibilityTable:
    """C(t) = max_j rho(x_j) / rho(x_j + t) over the part of the grid where x_j + t fits.

    A maximum attained at the last usable point is flagged: the supremum may
    then only be approached further out.
    """
    ts = np.asarray(ts, float)
    Cs, caveat = np.zeros(ts.size), np.zeros(ts.size, bool)
    for i, t in enumerate(ts):
        if t < 0:
            raise ValueError("t must be >= 0")
        k = wl.steps_for(t)
        if k is not None:
            if k >= wl.size:
                raise ValueError(f"t={t} exceeds the grid")
            ratio = wl.rho[:wl.size - k] / wl.rho[k:]
        else:
            usable = wl.x[wl.x + t <= wl.length]
            ratio = wl.rho[:usable.size] / wl.rho_at(usable + t)
        j = int(np.argmax(ratio))
        Cs[i] = ratio[j]
        caveat[i] = j == ratio.size - 1 and ratio.size > 1 and ratio[j] > ratio[0] * (1 + 1e-12)
    return AdmissibilityTable(ts, Cs, bool(np.all(np.isfinite(Cs))), caveat)


def translate(wl: WeightedLine, f, t: float) -> np.ndarray:
    """(T_t f)(x_j) = f(x_j + t), zero past the grid end; linear interpolation off-grid."""
    if t < 0:
        raise ValueError("t must be >= 0")
    f = np.asarray(f)
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    k = wl.steps_for(t)
    if k is not None:
        if k < f.size:
            out[:f.size - k] = f[k:]
        return out
    xs = wl.x + t
    inside = xs <= wl.length
    if np.iscomplexobj(f):
        out[inside] = (np.interp(xs[inside], wl.x, f.real) + 1j * np.interp(xs[inside], wl.x, f.imag))
    else:
        out[inside] = np.interp(xs[inside], wl.x, f)
    return out


def plane_wave(wl: WeightedLine, theta: float) -> np.ndarray:
    return np.exp(1j * theta * wl.x)


@dataclass
class GeneratorResidual:
    value: float
    resolution_warning: bool

    def __float__(self):
        return self.value


def generator_residual(wl: WeightedLine, theta: float) -> GeneratorResidual:
    """|| (T_h e - e)/h - i theta e || over interior points, e = exp(i theta x).

    The last grid point is excluded since its translate is the zero padding.
    """
    if abs(theta) > math.pi / wl.h:
        raise ValueError("theta beyond grid resolution pi/h")
    warn = abs(theta) * wl.h > math.pi / 4
    if warn:
        warnings.warn("theta close to grid resolution; residual dominated by discretization")
    e = plane_wave(wl, theta)
    r = (translate(wl, e, wl.h) - e) / wl.h - 1j * theta * e
    interior = WeightedLine(wl.h, wl.rho[:-1], wl.space, wl.p, wl.name)
    return GeneratorResidual(interior.norm(r[:-1]), warn)


def operator_norm_bound_check(wl: WeightedLine, t: float, f) -> tuple[float, float]:
    """(||T_t f||, C(t) ||f||) for one function."""
    C = admissibility(wl, [t]).C[0]
    return wl.norm(translate(wl, f, t)), C * wl.norm(f)


# -- mixing ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridShift:
    """Time-t0 translation as an operator on grid functionals.

    A functional x* acts by <x*, f> = sum_j x*_j f(x_j); its image under the
    adjoint is x*_{j - k} (k = t0/h), dropping mass shifted off the grid.
    """

    steps: int
    label: str = "translation"

    def functional_adjoint(self, xs) -> np.ndarray:
        xs = np.asarray(xs, complex)
        out = np.zeros_like(xs)
        if self.steps < xs.shape[-1]:
            out[..., self.steps:] = xs[..., :xs.shape[-1] - self.steps]
        return out


@dataclass
class SemigroupReport:
    verdict: str
    spectral: MixingReport | None
    analytic_mixing: bool
    rho_ratio: float
    lp_mass: float | None
    admissible: bool
    eigenfunctions_in_space: bool
    t0: float

    def summary(self) -> dict:
        out = {"verdict": self.verdict, "t0": self.t0,
               "analytic_mixing": self.analytic_mixing,
               "rho_end_over_max": {"value": self.rho_ratio, "tol": DECAY_THRESHOLD},
               "admissible": self.admissible,
               "eigenfunctions_in_space": self.eigenfunctions_in_space}
        if self.lp_mass is not None:
            out["lp_integral"] = {"value": self.lp_mass, "tol": 0.0}
        if self.spectral is not None:
            out["spectral"] = self.spectral.summary()
        return out


def semigroup_field(wl: WeightedLine, theta_start: float, theta_stop: float, t0: float,
                    n_nodes: int = 128, density: str = "hann") -> EigenField:
    """Eigenfield theta -> e_theta over an interval with angles theta * t0."""
    thetas, weights = arc_nodes(theta_start, theta_stop - theta_start, n_nodes, density)
    E = np.exp(1j * np.outer(thetas, wl.x))
    return EigenField(weights, thetas * t0, E, "translation")


def point_probes(wl: WeightedLine, points: Sequence[float]) -> np.ndarray:
    """Weighted point evaluations f -> rho(x) f(x), unit-norm functionals on C0."""
    P = np.zeros((len(points), wl.size), complex)
    for i, x in enumerate(points):
        k = wl.steps_for(x)
        if k is None or k >= wl.size:
            raise ValueError(f"probe point {x} is not a grid point")
        P[i, k] = wl.rho[k]
    return P


def semigroup_mixing_report(wl: WeightedLine, theta_interval: tuple[float, float], horizon: int,
                            probes: Sequence[float] = (0.0, 0.5, 1.0, 1.5, 2.0), t0: float = 1.0,
                            family: MixingFamily | None = None, tol: float = 1e-2,
                            n_nodes: int | None = None, density: str = "hann") -> SemigroupReport:
    """Mixing diagnostics for the time-t0 map through the plane-wave eigenfield.

    The analytic criterion is rho(x) -> 0, judged as rho(end)/max(rho) below
    DECAY_THRESHOLD; for Lp the integral of rho is reported as well. When rho
    does not decay the plane waves are not in the space and the spectral part
    is not run.

    Node sums over theta are periodic in the frequency variable with period
    2 pi / (node spacing); by default enough nodes are used that this period
    exceeds four times the largest frequency the probes reach.
    """
    family = MixingFamily.strong() if family is None else family
    k0 = wl.steps_for(t0)
    if k0 is None or k0 < 1:
        raise ValueError("t0 must be a positive multiple of the grid step")
    adm = admissibility(wl, [t0])
    if not adm.admissible:
        raise NonAdmissibleError("weight is not admissible at grid")
    ratio = float(wl.rho[-1] / np.max(wl.rho))
    analytic = ratio < DECAY_THRESHOLD
    lp_mass = float(np.trapezoid(wl.rho, wl.x)) if wl.space == "Lp" else None
    in_space = analytic
    if not in_space:
        return SemigroupReport("not-mixing (weight does not vanish at infinity)", None, False,
                               ratio, lp_mass, True, False, t0)
    need = max(probes) + horizon * t0
    if need > wl.length:
        raise NumericalGuardError("grid-coverage",
                                  f"probe orbit reaches x={need:g} beyond grid end {wl.length:g}")
    width = theta_interval[1] - theta_interval[0]
    if n_nodes is None:
        n_nodes = max(128, math.ceil(4 * need * width / (2 * math.pi)))
    field_ = semigroup_field(wl, theta_interval[0], theta_interval[1], t0, n_nodes, density)
    K = GammaOperator.from_field(field_)
    report = mixing_report(probe_traces(GridShift(k0), K, point_probes(wl, probes), horizon),
                           family, tol)
    return SemigroupReport(report.verdict, report, True, ratio, lp_mass, True, True, t0)
