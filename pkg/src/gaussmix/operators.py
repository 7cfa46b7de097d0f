"""Truncated operators with unimodular eigenvector fields.

Functionals act on vectors through the bilinear pairing
``<x*, x> = sum_k x*_k x_k``, so the functional adjoint of a matrix is its
plain transpose. ``TruncatedOperator.adjoint`` is the Hilbert adjoint
(conjugate transpose) used for <Tx, y> = <x, T^H y>.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
# ratio above which geometric tail extrapolation is flagged unreliable
TAIL_RATIO_LIMIT = 0.9


@dataclass(frozen=True)
class TruncatedOperator:
    """An N x N section of an operator.

    ``exact_probes`` is the number of leading canonical functionals on which
    the functional adjoint agrees with the untruncated operator.
    """

    matrix: np.ndarray
    label: str = "operator"
    truncation_note: str = ""
    exact_probes: int | None = None

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        if not np.all(np.isfinite(mat)):
            raise ValueError("operator matrix has non-finite entries")
        object.__setattr__(self, "matrix", mat)
        # single-diagonal matrices are applied entrywise so the result is bit-exact
        rows, cols = np.nonzero(mat)
        offsets = np.unique(cols - rows)
        band = int(offsets[0]) if offsets.size == 1 else None
        object.__setattr__(self, "_band", band)
        if self.exact_probes is None:
            object.__setattr__(self, "exact_probes", mat.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, complex)
        k = self._band
        if k is None or x.ndim != 1:
            return self.matrix @ x
        n = self.dim
        out = np.zeros(n, complex)
        if k >= 0:
            out[:n - k] = np.diagonal(self.matrix, k) * x[k:]
        else:
            out[-k:] = np.diagonal(self.matrix, k) * x[:n + k]
        return out

    def adjoint(self, y) -> np.ndarray:
        """Hilbert adjoint: <Tx, y> = <x, T^H y> with <a, b> = sum a conj(b)."""
        return self.matrix.conj().T @ np.asarray(y, complex)

    def functional_adjoint(self, xs) -> np.ndarray:
        """Action on functionals: <T* x*, x> = <x*, T x> under the bilinear pairing.

        Accepts a single functional or a stack of row functionals.
        """
        return np.asarray(xs, complex) @ self.matrix

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        rows, cols = np.nonzero(self.matrix)
        for r, c in zip(rows, cols):
            v = self.matrix[r, c]
            w.writerow([int(r), int(c), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def identity(cls, n: int, scale: complex = 1.0) -> "TruncatedOperator":
        return cls(scale * np.eye(n), f"{scale}*identity", "exact")

    @classmethod
    def diagonal(cls, entries: Sequence[complex]) -> "TruncatedOperator":
        return cls(np.diag(np.asarray(entries, complex)), "diagonal", "exact")


# -- weighted backward shift ------------------------------------------------------

@dataclass(frozen=True)
class ShiftSpec:
    """Weights w_1..w_{N-1} of a backward shift (w_0 is fixed to 1)."""

    weights: np.ndarray
    space: str = "2"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if np.any(np.abs(w) == 0):
            raise ValueError("shift weights must be nonzero")
        if not np.all(np.isfinite(w)):
            raise ValueError("shift weights must be finite")
        if self.space not in ("1", "2", "c0"):
            raise ValueError("space must be one of '1', '2', 'c0'")
        object.__setattr__(self, "weights", w)

    @classmethod
    def constant(cls, w: complex, dim: int, space: str = "2") -> "ShiftSpec":
        return cls(np.full(dim - 1, w, complex), space)

    @property
    def dim(self) -> int:
        return self.weights.size + 1

    @property
    def full_weights(self) -> np.ndarray:
        """w_0, ..., w_{N-1} with w_0 = 1."""
        return np.concatenate([[1.0 + 0j], self.weights])

    def inverse_products(self) -> np.ndarray:
        """1/(w_0 ... w_n) for n < N."""
        return 1.0 / np.cumprod(self.full_weights)

    @property
    def p(self) -> float:
        return math.inf if self.space == "c0" else float(self.space)

    def has_unimodular_eigenvalues(self) -> bool:
        """Truncation-level flag: the coefficient profile of E(1) looks
        summable (p finite) or null (c0), judged by its last two terms."""
        mags = np.abs(self.inverse_products())
        if mags.size < 2:
            return False
        if self.space == "c0":
            return bool(mags[-1] < mags[0] and mags[-1] <= mags[-2])
        ratio = (mags[-1] / mags[-2]) ** self.p
        return bool(ratio < 1.0)


def weighted_shift(spec: ShiftSpec) -> TruncatedOperator:
    n = spec.dim
    mat = np.zeros((n, n), complex)
    idx = np.arange(1, n)
    mat[idx - 1, idx] = spec.weights
    return TruncatedOperator(
        mat, "weighted-backward-shift",
        f"exact on vectors supported in coordinates < {n}; functional "
        f"adjoint exact on e_0*..e_{n - 2}*",
        exact_probes=n - 1)


@dataclass
class ShiftEigenvector:
    vector: np.ndarray
    eigenvalue: complex
    tail_bound: float
    tail_reliable: bool
    residual: float


def _check_unimodular(lam: complex):
    if abs(abs(lam) - 1.0) > 1e-12:
        raise ValueError(f"eigenvalue {lam} is not unimodular")


def shift_eigenvector(spec: ShiftSpec, lam: complex) -> ShiftEigenvector:
    lam = complex(lam)
    _check_unimodular(lam)
    coeffs = spec.inverse_products()
    vec = lam ** np.arange(spec.dim) * coeffs
    tail, reliable = _geometric_tail(np.abs(coeffs), spec.p)
    op = weighted_shift(spec)
    residual = float(np.linalg.norm(op.apply(vec) - lam * vec))
    return ShiftEigenvector(vec, lam, tail, reliable, residual)


def shift_eigenvectors(spec: ShiftSpec, lams: Sequence[complex]) -> np.ndarray:
    """Rows E(lambda_i) for a batch of unimodular eigenvalues."""
    lams = np.asarray(lams, complex).ravel()
    if np.any(np.abs(np.abs(lams) - 1.0) > 1e-12):
        raise ValueError("eigenvalues must be unimodular")
    return lams[:, None] ** np.arange(spec.dim)[None, :] * spec.inverse_products()[None, :]


def _geometric_tail(mags: np.ndarray, p: float) -> tuple[float, bool]:
    """Tail sum_{n>=N} |c_n| from the ratio of the last two magnitudes."""
    if mags.size < 2 or mags[-2] == 0:
        return math.inf, False
    r = mags[-1] / mags[-2]
    if r >= 1.0:
        return math.inf, False
    return float(mags[-1] * r / (1.0 - r)), bool(r <= TAIL_RATIO_LIMIT)


def shift_lipschitz_constant(spec: ShiftSpec) -> float:
    """sum_n n |1/(w_0...w_n)|, a Lipschitz bound for lambda -> E(lambda) on the circle."""
    c = np.abs(spec.inverse_products())
    return float(np.sum(np.arange(spec.dim) * c))


# -- Kalisch-type operator ---------------------------------------------------------

@dataclass(frozen=True)
class KalischSpec:
    grid: int

    def __post_init__(self):
        if self.grid < 16:
            raise ValueError("Kalisch grid needs at least 16 cells")

    @property
    def h(self) -> float:
        return TWO_PI / self.grid

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.grid) + 0.5) * self.h


def kalisch(spec: KalischSpec) -> TruncatedOperator:
    """Discretization of f -> e^{it} f(t) + int_t^{2pi} i e^{is} f(s) ds.

    With this tail-integral form the indicator of (0, t) is an eigenvector
    for e^{it} and the constant function is fixed. The integral is a
    rectangle rule over the cells strictly to the right of t_j.
    """
    t = spec.nodes
    phase = np.exp(1j * t)
    mat = np.triu(np.broadcast_to(1j * spec.h * phase, (spec.grid, spec.grid)), k=1)
    mat = mat + np.diag(phase)
    return TruncatedOperator(mat, "kalisch", "grid discretization, O(h) consistent")


@dataclass
class KalischEigenvector:
    vector: np.ndarray
    eigenvalue: complex
    degenerate: bool


def kalisch_eigenvector(spec: KalischSpec, t: float) -> KalischEigenvector:
    """Cell-averaged indicator of (0, t) with eigenvalue e^{it}."""
    if not 0.0 < t < TWO_PI:
        raise ValueError("t must lie in (0, 2pi)")
    h = spec.h
    left = spec.nodes - h / 2
    vec = np.clip((t - left) / h, 0.0, 1.0).astype(complex)
    degenerate = t < h / 2
    if degenerate:
        vec[:] = 0
    return KalischEigenvector(vec, complex(np.exp(1j * t)), degenerate)


def relative_eigen_residual(op: TruncatedOperator, vec, lam: complex) -> float:
    vec = np.asarray(vec, complex)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        return 0.0
    return float(np.linalg.norm(op.apply(vec) - lam * vec) / nrm)


def kalisch_grid_eigenvectors(spec: KalischSpec, indices: Sequence[int]) -> np.ndarray:
    """Exact eigenvectors of the discretized operator for eigenvalues e^{i t_m}.

    The matrix is upper triangular with distinct diagonal entries, so the
    eigenvector for diagonal entry m has v_m = 1, v_k = 0 for k > m and is
    found by back substitution. Rows of the result are the eigenvectors.
    """
    t = spec.nodes
    phase = np.exp(1j * t)
    coef = 1j * spec.h * phase
    idx = np.asarray(indices, int)
    lam = phase[idx]
    out = np.zeros((idx.size, spec.grid), complex)
    out[np.arange(idx.size), idx] = 1.0
    acc = np.zeros(idx.size, complex)  # running sum_{l > k} coef_l v_l
    for k in range(spec.grid - 1, -1, -1):
        below = idx > k
        if below.any():
            out[below, k] = -acc[below] / (phase[k] - lam[below])
        acc += coef[k] * out[:, k]
    return out


# -- spanning defect ----------------------------------------------------------------

@dataclass
class DefectReport:
    value: float
    rank: int
    degenerate: bool = False

    def __float__(self):
        return self.value


def orthonormal_span(vectors: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Columns of an orthonormal basis for the span of the rows of ``vectors``.

    Modified Gram-Schmidt with reorthogonalization of each pivot; at each step the
    remaining vector with the largest residual is taken next. A vector is
    dropped once its residual falls below ``rank_tol`` times its original norm.
    """
    V = np.array(vectors, dtype=complex, copy=True)
    if V.ndim == 1:
        V = V[None, :]
    norms0 = np.linalg.norm(V, axis=1)
    alive = norms0 > 0
    basis: list[np.ndarray] = []
    n = V.shape[1]
    while alive.any() and len(basis) < n:
        res = np.linalg.norm(V, axis=1)
        rel = np.where(alive, res / np.where(norms0 > 0, norms0, 1.0), -1.0)
        j = int(np.argmax(rel))
        if rel[j] <= rank_tol:
            break
        q = V[j] / res[j]
        for _ in range(2):  # reorthogonalize the pivot; twice is enough
            for qb in basis:
                q = q - (qb.conj() @ q) * qb
            q /= np.linalg.norm(q)
        basis.append(q)
        alive[j] = False
        V -= np.outer(V @ q.conj(), q)
        V[~alive] = 0
    if not basis:
        return np.zeros((n, 0), complex)
    return np.array(basis).T


def spanning_defect(vectors, dim: int | None = None, rank_tol: float = 1e-10) -> DefectReport:
    """Largest distance from a canonical basis vector to the span of ``vectors``."""
    V = np.asarray(vectors, dtype=complex)
    if V.ndim == 1:
        V = V[None, :]
    if V.shape[0] == 0:
        raise ValueError("need at least one vector")
    if dim is not None and V.shape[1] != dim:
        raise ValueError("vector length does not match dimension")
    Q = orthonormal_span(V, rank_tol)
    # form the projector residual directly; sqrt(1 - |Q_j|^2) would amplify rounding
    R = np.eye(V.shape[1]) - Q @ Q.conj().T
    dist = np.linalg.norm(R, axis=0)
    return DefectReport(float(np.max(dist)), Q.shape[1], degenerate=Q.shape[1] == 0)


def sample_circle_complement(count: int, rng: np.random.Generator,
                             excluded_arcs: Sequence[tuple[float, float]] = (),
                             excluded_points: Sequence[float] = ()) -> np.ndarray:
    """Unit complex numbers uniform on the circle minus arcs and points.

    Arcs are (start, length) in radians, taken counterclockwise. Sampling is
    uniform on the complement, i.e. proportional to the length of each piece.
    """
    pieces = _complement_arcs(excluded_arcs)
    lengths = np.array([p[1] for p in pieces])
    if lengths.sum() <= 0:
        raise ValueError("excluded arcs cover the whole circle")
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    excluded = np.mod(np.asarray(excluded_points, float), TWO_PI)
    out = np.empty(count)
    filled = 0
    while filled < count:
        u = rng.uniform(0.0, cum[-1], size=count - filled)
        k = np.searchsorted(cum, u, side="right") - 1
        k = np.clip(k, 0, len(pieces) - 1)
        starts = np.array([p[0] for p in pieces])[k]
        theta = np.mod(starts + (u - cum[k]), TWO_PI)
        if excluded.size:
            theta = theta[~np.isin(theta, excluded)]
        out[filled:filled + theta.size] = theta
        filled += theta.size
    return np.exp(1j * out)


def _complement_arcs(arcs: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    if not arcs:
        return [(0.0, TWO_PI)]
    # unroll onto [0, 4pi) so wrapped arcs become plain intervals
    ivs = []
    for start, length in arcs:
        if length >= TWO_PI:
            return []
        s = start % TWO_PI
        ivs.append((s, s + length))
        ivs.append((s - TWO_PI, s + length - TWO_PI))
    ivs.sort()
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    gaps = []
    cursor = 0.0
    for a, b in merged:
        if b <= 0:
            continue
        if a > cursor:
            gaps.append((cursor, min(a, TWO_PI) - cursor))
        cursor = max(cursor, b)
        if cursor >= TWO_PI:
            break
    if cursor < TWO_PI:
        gaps.append((cursor, TWO_PI - cursor))
    return [g for g in gaps if g[1] > 0]
