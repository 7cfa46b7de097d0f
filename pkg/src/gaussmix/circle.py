"""Complex measures on the unit circle and mixing-family diagnostics.

Fourier convention used throughout the package:

    sigma_hat(n) = integral of exp(-i n theta) d sigma(theta)

A measure is stored as a finite list of atoms plus an optional density
sampled at the midpoints of ``G`` uniform cells of [0, 2pi), taken against
normalized arclength (so the constant density 1 is normalized Lebesgue).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_GRID = 4096


class AliasingError(ValueError):
    """Requested a Fourier index beyond the Nyquist limit of the density grid."""


def _wrap(theta):
    return np.mod(np.asarray(theta, dtype=float), TWO_PI)


@dataclass(frozen=True)
class CircleMeasure:
    atom_angles: np.ndarray
    atom_weights: np.ndarray
    density: np.ndarray | None = None
    grid_size: int = DEFAULT_GRID

    def __post_init__(self):
        angles = _wrap(np.atleast_1d(self.atom_angles)).astype(float)
        weights = np.atleast_1d(np.asarray(self.atom_weights, dtype=complex))
        if angles.shape != weights.shape:
            raise ValueError("atom angles and weights must have the same length")
        if not np.all(np.isfinite(weights)):
            raise ValueError("atom weights must be finite")
        object.__setattr__(self, "atom_angles", angles)
        object.__setattr__(self, "atom_weights", weights)
        if self.density is not None:
            dens = np.asarray(self.density, dtype=complex).ravel()
            if not np.all(np.isfinite(dens)):
                raise ValueError("density samples must be finite")
            object.__setattr__(self, "density", dens)
            object.__setattr__(self, "grid_size", dens.size)
        if self.grid_size < 1:
            raise ValueError("grid_size must be positive")

    # -- constructors -------------------------------------------------------
    @classmethod
    def atoms(cls, angles: Iterable[float], weights: Iterable[complex],
              grid_size: int = DEFAULT_GRID) -> "CircleMeasure":
        return cls(np.asarray(list(angles), float), np.asarray(list(weights), complex),
                   None, grid_size)

    @classmethod
    def dirac(cls, angle: float = 0.0, weight: complex = 1.0,
              grid_size: int = DEFAULT_GRID) -> "CircleMeasure":
        return cls.atoms([angle], [weight], grid_size)

    @classmethod
    def from_density(cls, func: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                     grid_size: int = DEFAULT_GRID) -> "CircleMeasure":
        """Density against normalized arclength, sampled at cell midpoints."""
        if callable(func):
            dens = np.asarray(func(cell_midpoints(grid_size)), dtype=complex)
            dens = np.broadcast_to(dens, (grid_size,)).copy()
        else:
            dens = np.asarray(func, dtype=complex)
        return cls(np.zeros(0), np.zeros(0, complex), dens)

    @classmethod
    def lebesgue(cls, grid_size: int = DEFAULT_GRID) -> "CircleMeasure":
        return cls.from_density(np.ones(grid_size))

    # -- algebra ------------------------------------------------------------
    def _density_or_zero(self, grid_size: int) -> np.ndarray:
        if self.density is None:
            return np.zeros(grid_size, complex)
        if self.density.size != grid_size:
            raise ValueError("density grids differ in size")
        return self.density

    def __add__(self, other: "CircleMeasure") -> "CircleMeasure":
        if self.density is None and other.density is None:
            return CircleMeasure(np.concatenate([self.atom_angles, other.atom_angles]),
                                 np.concatenate([self.atom_weights, other.atom_weights]),
                                 None, max(self.grid_size, other.grid_size))
        g = self.density.size if self.density is not None else other.density.size
        return CircleMeasure(np.concatenate([self.atom_angles, other.atom_angles]),
                             np.concatenate([self.atom_weights, other.atom_weights]),
                             self._density_or_zero(g) + other._density_or_zero(g))

    def scale(self, c: complex) -> "CircleMeasure":
        dens = None if self.density is None else c * self.density
        return CircleMeasure(self.atom_angles, c * self.atom_weights, dens, self.grid_size)

    __rmul__ = scale

    def __mul__(self, c: complex) -> "CircleMeasure":
        return self.scale(c)

    # -- properties ---------------------------------------------------------
    @property
    def nyquist(self) -> int:
        return self.grid_size // 2

    def total_variation(self) -> float:
        tv = float(np.sum(np.abs(self.atom_weights)))
        if self.density is not None:
            tv += float(np.mean(np.abs(self.density)))
        return tv

    def total_mass(self) -> complex:
        mass = complex(np.sum(self.atom_weights))
        if self.density is not None:
            mass += complex(np.mean(self.density))
        return mass

    def is_probability(self, tol: float = 1e-12) -> bool:
        parts = [self.atom_weights]
        if self.density is not None:
            parts.append(self.density)
        vals = np.concatenate(parts) if parts else np.zeros(0)
        if np.any(np.abs(vals.imag) > tol) or np.any(vals.real < -tol):
            return False
        return abs(self.total_mass() - 1.0) <= tol

    def is_zero(self) -> bool:
        return self.total_variation() == 0.0

    # -- Fourier ------------------------------------------------------------
    def _check_index(self, n: np.ndarray):
        if self.density is not None and np.any(np.abs(n) > self.nyquist):
            raise AliasingError(
                f"index {int(np.max(np.abs(n)))} exceeds Nyquist limit {self.nyquist}")

    def coefficients(self, horizon: int) -> np.ndarray:
        """sigma_hat(0), ..., sigma_hat(horizon - 1)."""
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self._check_index(np.array([horizon - 1]))
        n = np.arange(horizon)
        out = np.zeros(horizon, complex)
        if self.atom_weights.size:
            # chunk over atoms to bound memory for large pushforwards
            for start in range(0, self.atom_weights.size, 2048):
                a = self.atom_angles[start:start + 2048]
                w = self.atom_weights[start:start + 2048]
                out += np.exp(-1j * np.outer(n, a)) @ w
        if self.density is not None:
            g = self.grid_size
            spec = np.fft.fft(self.density) / g
            # midpoint grid theta_j = (j + 1/2) 2pi/G adds a half-cell phase
            out += spec[n % g] * np.exp(-1j * math.pi * n / g)
        return out

    def to_json(self) -> str:
        obj = {
            "atoms": [[float(t), float(w.real), float(w.imag)]
                      for t, w in zip(self.atom_angles, self.atom_weights)],
            "density": ([] if self.density is None else
                        [[float(d.real), float(d.imag)] for d in self.density]),
            "grid": int(self.grid_size),
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "CircleMeasure":
        obj = json.loads(text)
        atoms = np.asarray(obj.get("atoms", []), float).reshape(-1, 3)
        dens_raw = obj.get("density", [])
        dens = None
        if len(dens_raw):
            arr = np.asarray(dens_raw, float)
            dens = arr[:, 0] + 1j * arr[:, 1] if arr.ndim == 2 else arr.astype(complex)
        return cls(atoms[:, 0], atoms[:, 1] + 1j * atoms[:, 2], dens, int(obj["grid"]))


def cell_midpoints(grid_size: int) -> np.ndarray:
    return (np.arange(grid_size) + 0.5) * TWO_PI / grid_size


def fourier_coeff(sigma: CircleMeasure, n: int) -> complex:
    n_arr = np.array([n])
    sigma._check_index(n_arr)
    val = complex(np.sum(sigma.atom_weights * np.exp(-1j * n * sigma.atom_angles)))
    if sigma.density is not None:
        theta = cell_midpoints(sigma.grid_size)
        val += complex(np.mean(sigma.density * np.exp(-1j * n * theta)))
    return val


@dataclass(frozen=True)
class FourierSequence:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).ravel()
        if vals.size < 1:
            raise ValueError("horizon must be >= 1")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sequence must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def horizon(self) -> int:
        return self.values.size

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def cesaro_abs(a: FourierSequence | Sequence[complex], N: int) -> float:
    vals = a.values if isinstance(a, FourierSequence) else np.asarray(a, complex)
    if not 1 <= N <= vals.size:
        raise ValueError(f"N={N} outside [1, {vals.size}]")
    return float(np.mean(np.abs(vals[:N])))


# -- mixing families -----------------------------------------------------------

def _strong_trace(a: np.ndarray) -> np.ndarray:
    return np.abs(a)


def _weak_trace(a: np.ndarray) -> np.ndarray:
    # Phi_n for n = 1..H
    return np.cumsum(np.abs(a)) / np.arange(1, a.size + 1)


def _ergodic_trace(a: np.ndarray) -> np.ndarray:
    return np.abs(np.cumsum(a) / np.arange(1, a.size + 1))


@dataclass(frozen=True)
class MixingFamily:
    """A c0-like family given by seminorms Phi_n on bounded sequences.

    ``phi(a, n)`` evaluates one seminorm; ``trace(a)`` evaluates all indices
    a finite sequence supports. Strong traces are indexed n = 0..H-1, the
    Cesaro-type families n = 1..H.
    """

    kind: str
    evaluator: Callable[[np.ndarray, int], float] | None = None
    bound: float = 1.0
    first_index: int = 0

    def __post_init__(self):
        if self.kind not in ("strong", "weak", "ergodic", "custom"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "custom" and self.evaluator is None:
            raise ValueError("custom family needs an evaluator")
        if self.kind != "custom":
            object.__setattr__(self, "first_index", 0 if self.kind == "strong" else 1)

    @classmethod
    def strong(cls) -> "MixingFamily":
        return cls("strong")

    @classmethod
    def weak(cls) -> "MixingFamily":
        return cls("weak")

    @classmethod
    def ergodic(cls) -> "MixingFamily":
        return cls("ergodic")

    @classmethod
    def named(cls, name: str) -> "MixingFamily":
        return {"strong": cls.strong, "weak": cls.weak, "ergodic": cls.ergodic}[name]()

    def phi(self, a: Sequence[complex], n: int) -> float:
        a = np.asarray(a, complex)
        if self.kind == "strong":
            return float(abs(a[n]))
        if self.kind in ("weak", "ergodic"):
            if n < 1:
                raise ValueError("Cesaro seminorms are defined for n >= 1")
            if self.kind == "weak":
                return float(np.mean(np.abs(a[:n])))
            return float(abs(np.mean(a[:n])))
        return float(self.evaluator(a, n))

    def trace(self, a: Sequence[complex]) -> tuple[np.ndarray, np.ndarray]:
        """Return (indices, Phi values) for every index supported by ``a``."""
        a = np.asarray(a, complex)
        if self.kind == "strong":
            return np.arange(a.size), _strong_trace(a)
        if self.kind == "weak":
            return np.arange(1, a.size + 1), _weak_trace(a)
        if self.kind == "ergodic":
            return np.arange(1, a.size + 1), _ergodic_trace(a)
        idx = np.arange(self.first_index, a.size)
        return idx, np.array([self.phi(a, int(n)) for n in idx])


# -- classification -----------------------------------------------------------

S_CONTINUOUS = "S-continuous-at-horizon"
NOT_S_CONTINUOUS = "not-S-continuous"
INCONCLUSIVE = "inconclusive"

# a trace whose last-quarter mean keeps at least this fraction of the
# third-quarter mean is treated as non-decaying
NO_DECAY_RATIO = 0.9


@dataclass
class Verdict:
    verdict: str
    family: str
    horizon: int
    tol: float
    tail_max: float
    indices: np.ndarray = field(repr=False)
    trace: np.ndarray = field(repr=False)
    atom_at_one: complex | None = None
    degenerate: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "phi_n"])
        for n, v in zip(self.indices, self.trace):
            w.writerow([int(n), repr(float(v))])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {"verdict": self.verdict, "family": self.family, "horizon": self.horizon,
               "tail_max": {"value": float(self.tail_max), "tol": self.tol},
               "degenerate": self.degenerate}
        if self.atom_at_one is not None:
            out["atom_at_one"] = {"value": [self.atom_at_one.real, self.atom_at_one.imag],
                                  "tol": self.tol}
        return out


def classify_sequence(a: FourierSequence | Sequence[complex], family: MixingFamily,
                      tol: float) -> Verdict:
    """Finite-horizon verdict on a positive Fourier sequence.

    S-continuous-at-horizon iff the max of Phi_n over the last ceil(H/4)
    indices is below ``tol``. Not S-continuous iff that tail max exceeds
    10*tol and the trace shows no decay over the last half.
    """
    vals = a.values if isinstance(a, FourierSequence) else np.asarray(a, complex)
    H = vals.size
    idx, tr = family.trace(vals)
    q = max(1, math.ceil(H / 4))
    tail_max = float(np.max(tr[-q:]))
    atom = complex(np.mean(vals)) if family.kind == "ergodic" else None
    degenerate = bool(np.all(vals == 0))
    if degenerate or tail_max < tol:
        verdict = S_CONTINUOUS
    elif tail_max > 10 * tol and _no_decay(tr):
        verdict = NOT_S_CONTINUOUS
    else:
        verdict = INCONCLUSIVE
    return Verdict(verdict, family.kind, H, tol, tail_max, idx, tr, atom, degenerate)


def _no_decay(trace: np.ndarray) -> bool:
    half = trace[trace.size // 2:]
    if half.size < 2:
        return True
    third, fourth = half[: half.size // 2], half[half.size // 2:]
    return float(np.mean(fourth)) >= NO_DECAY_RATIO * float(np.mean(third))


def classify(sigma: CircleMeasure, family: MixingFamily, horizon: int,
             tol: float) -> Verdict:
    if sigma.density is not None and horizon - 1 > sigma.nyquist:
        raise AliasingError(f"horizon {horizon} exceeds Nyquist limit {sigma.nyquist}")
    return classify_sequence(sigma.coefficients(horizon), family, tol)


def pushforward(weights: Sequence[complex], angles: Sequence[float],
                grid_size: int = DEFAULT_GRID, merge_tol: float = 1e-13) -> CircleMeasure:
    """Image of the node measure ``sum_j weights_j delta_{node_j}`` under the
    node-to-angle map, as an atomic circle measure."""
    w = np.asarray(weights, complex).ravel()
    th = _wrap(np.asarray(angles, float).ravel())
    if w.shape != th.shape:
        raise ValueError("weights and angles must match")
    if np.any(np.isnan(w)) or np.any(np.isnan(th)):
        raise ValueError("NaN weight or angle")
    if w.size == 0:
        return CircleMeasure(np.zeros(0), np.zeros(0, complex), None, grid_size)
    order = np.argsort(th, kind="stable")
    th, w = th[order], w[order]
    # angles within merge_tol of each other (including across 0 = 2pi) merge
    new_group = np.concatenate([[True], np.diff(th) > merge_tol])
    gid = np.cumsum(new_group) - 1
    if gid[-1] > 0 and TWO_PI - th[-1] + th[0] <= merge_tol:
        gid[gid == gid[-1]] = 0
    n_groups = int(gid.max()) + 1
    merged_w = np.zeros(n_groups, complex)
    np.add.at(merged_w, gid, w)
    first = np.zeros(n_groups, float)
    seen = np.zeros(n_groups, bool)
    for g, t in zip(gid, th):
        if not seen[g]:
            first[g], seen[g] = t, True
    return CircleMeasure(first, merged_w, None, grid_size)
