"""Harmonic analysis on dyadic Cantor groups and on block product spaces.

Dyadic conventions: a point of {0,1}^d is a bitmask, coordinate n (1-based)
stored in bit n-1. The character for an index set I (also a bitmask) is
gamma_I(w) = (-1)^popcount(I & w), and two points first differing at
coordinate n are at distance 2^-n.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

NAIVE_MAX_DEPTH = 8
MAX_DEPTH = 16
ARC_RESOLUTION = 1e-12
PRODUCT_SIZE_LIMIT = 100_000
FULL_GRAM_LIMIT = 2048


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def top_coordinate(masks: np.ndarray) -> np.ndarray:
    """max I (1-based) for each nonempty bitmask, 0 for the empty set."""
    masks = np.asarray(masks, np.int64)
    out = np.zeros_like(masks)
    nz = masks > 0
    out[nz] = np.floor(np.log2(masks[nz])).astype(np.int64) + 1
    return out


@dataclass(frozen=True)
class DyadicField:
    depth: int
    values: np.ndarray
    holder_alpha: float = 1.5
    holder_c: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, complex)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != 2 ** self.depth:
            raise ValueError("values must have 2^depth rows")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def measured_holder_constant(self, alpha: float | None = None) -> float:
        """max ||E(w) - E(w')|| 2^{alpha n(w, w')} over all distinct pairs."""
        alpha = self.holder_alpha if alpha is None else alpha
        d = self.depth
        X = np.hstack([self.values.real, self.values.imag])
        best = 0.0
        idx = np.arange(2 ** d)
        for n in range(1, d + 1):
            bit = 1 << (n - 1)
            low = idx & (bit - 1)
            # pairs agreeing on coordinates < n and differing at n
            for prefix in range(bit):
                group = idx[low == prefix]
                a = group[(group & bit) == 0]
                b = group[(group & bit) != 0]
                if a.size == 0:
                    continue
                dist = cdist(X[a], X[b])
                best = max(best, float(dist.max()) * 2.0 ** (alpha * n))
        return best

    def pair_distances(self) -> np.ndarray:
        """Full symmetric matrix of 2^-n(w, w') (0 on the diagonal)."""
        idx = np.arange(2 ** self.depth)
        x = idx[:, None] ^ idx[None, :]
        low = x & -x
        with np.errstate(divide="ignore"):
            n = np.where(x > 0, np.log2(np.maximum(low, 1)).astype(int) + 1, 0)
        return np.where(x > 0, 2.0 ** (-n.astype(float)), 0.0)


def walsh_matrix(depth: int) -> np.ndarray:
    idx = np.arange(2 ** depth)
    return 1.0 - 2.0 * (_popcount(idx[:, None] & idx[None, :]) & 1)


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized natural-order fast Walsh-Hadamard transform along axis 0."""
    x = np.array(values, dtype=complex, copy=True)
    n = x.shape[0]
    d = int(round(math.log2(n)))
    rest = x.shape[1:]
    for b in range(d):
        y = x.reshape((n >> (b + 1), 2, 1 << b) + rest)
        lo, hi = y[:, 0].copy(), y[:, 1].copy()
        y[:, 0] = lo + hi
        y[:, 1] = lo - hi
        x = y.reshape((n,) + rest)
    return x


def walsh_coeffs(field_: DyadicField, method: str = "auto") -> np.ndarray:
    """E_hat(gamma_I) = 2^-d sum_w gamma_I(w) E(w), rows indexed by the bitmask I."""
    d = field_.depth
    if d > MAX_DEPTH:
        raise ValueError(f"depth {d} exceeds the supported maximum {MAX_DEPTH}")
    if method == "auto":
        method = "naive" if d <= NAIVE_MAX_DEPTH else "fast"
    if method == "naive":
        return walsh_matrix(d) @ field_.values / 2 ** d
    if method == "fast":
        return fwht(field_.values) / 2 ** d
    raise ValueError(f"unknown method {method!r}")


@dataclass
class DecayCertificate:
    passed: bool
    worst_ratio: float
    witness: int | None
    witness_n: int | None

    def summary(self) -> dict:
        return {"passed": self.passed, "worst_ratio": {"value": self.worst_ratio, "tol": 1.0},
                "witness_mask": self.witness, "witness_n": self.witness_n}


def certify_decay(coeffs: np.ndarray, C: float, alpha: float, slack: float = 1e-9
                  ) -> DecayCertificate:
    """Check ||E_hat(gamma_I)|| <= (C/2) 2^{-alpha n} for every nonempty I and n in I.

    The binding n for a given I is max I, so the ratio is evaluated there.
    ``slack`` absorbs floating-point rounding in the comparison.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 1:
        coeffs = coeffs[:, None]
    masks = np.arange(1, coeffs.shape[0])
    if masks.size == 0:
        return DecayCertificate(True, 0.0, None, None)
    norms = np.linalg.norm(coeffs[1:], axis=1)
    n = top_coordinate(masks)
    bound = (C / 2.0) * 2.0 ** (-alpha * n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(norms > 0, norms / bound, 0.0)
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    passed = worst <= 1.0 + slack
    return DecayCertificate(passed, worst, int(masks[k]) if worst > 0 else None,
                            int(n[k]) if worst > 0 else None)


def level_sums(coeffs: np.ndarray) -> np.ndarray:
    """sum over I with max I = n of ||E_hat(gamma_I)||, for n = 1..d."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 1:
        coeffs = coeffs[:, None]
    d = int(round(math.log2(coeffs.shape[0])))
    norms = np.linalg.norm(coeffs, axis=1)
    return np.array([norms[2 ** (n - 1):2 ** n].sum() for n in range(1, d + 1)])


@dataclass
class LevelDecay:
    sums: np.ndarray
    max_ratio: float
    fitted_ratio: float


def level_decay(coeffs: np.ndarray, skip: int = 0) -> LevelDecay:
    """Consecutive ratios of level sums (max, and the geometric fit)."""
    s = level_sums(coeffs)[skip:]
    ratios = s[1:] / s[:-1]
    slope = np.polyfit(np.arange(s.size), np.log2(s), 1)[0] if s.size > 1 else 0.0
    return LevelDecay(level_sums(coeffs), float(np.max(ratios)) if ratios.size else 0.0,
                      float(2.0 ** slope))


# -- nested arc construction ---------------------------------------------------------

class DepthError(ValueError):
    def __init__(self, requested: int, feasible: int):
        super().__init__(f"depth {requested} infeasible at arc resolution; maximal feasible depth is {feasible}")
        self.requested = requested
        self.feasible = feasible


@dataclass
class CantorEigenfield:
    field: DyadicField
    angles: np.ndarray
    arc_lengths: list
    min_separation: float
    eigen_residual: float | None = None


def _child_length(parent: float, level: int, alpha: float, lipschitz: float) -> float:
    return min(parent / 4.0, 2.0 ** (-alpha * level) / lipschitz)


def max_feasible_depth(arc_length: float, alpha: float, lipschitz: float,
                       resolution: float = ARC_RESOLUTION, limit: int = 64) -> int:
    length = arc_length
    for level in range(1, limit + 1):
        length = _child_length(length, level, alpha, lipschitz)
        if length < resolution:
            return level - 1
    return limit


def cantor_eigenfield(arc_field: Callable[[np.ndarray], np.ndarray], arc_start: float,
                      arc_length: float, lipschitz: float, depth: int, alpha: float,
                      op=None) -> CantorEigenfield:
    """Nested dyadic subdivision of an arc carrying a continuous eigenfield.

    Every arc V_s of level k has two children of length
    min(|V_s|/4, 2^{-alpha(k+1)}/L) centered at its 1/3 and 2/3 points, so the
    children have disjoint closures and L * |V_{s i}| <= 2^{-alpha(k+1)}.
    Coordinate k+1 of a leaf selects the child at level k. Leaves sit at the
    centers of the final arcs.

    ``arc_field`` maps an array of unit complex numbers to rows E(lambda).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if arc_length <= 0:
        raise ValueError("arc must be nontrivial")
    feasible = max_feasible_depth(arc_length, alpha, lipschitz)
    if depth > feasible:
        raise DepthError(depth, feasible)
    centers = np.array([arc_start + arc_length / 2.0])
    length = arc_length
    lengths = [length]
    for level in range(depth):
        child = _child_length(length, level + 1, alpha, lipschitz)
        # child bit for coordinate level+1 is bit `level` of the leaf index
        left = centers - length / 6.0
        right = centers + length / 6.0
        new = np.empty(centers.size * 2)
        # index layout: new index = old index + bit * 2^level
        new[:centers.size] = left
        new[centers.size:] = right
        centers = new
        length = child
        lengths.append(length)
    angles = np.mod(centers, 2 * math.pi)
    lam = np.exp(1j * angles)
    vals = np.asarray(arc_field(lam), complex)
    srt = np.sort(angles)
    sep = float(np.min(np.diff(srt))) if srt.size > 1 else math.inf
    res = None
    if op is not None:
        res = float(np.max(np.linalg.norm(vals @ op.matrix.T - lam[:, None] * vals, axis=1)
                           / np.maximum(np.linalg.norm(vals, axis=1), 1e-300)))
    dyadic = DyadicField(depth, vals, alpha)
    return CantorEigenfield(dyadic, angles, lengths, sep, res)


def coeffs_to_csv(coeffs: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mask", "size", "top", "norm"])
    norms = np.linalg.norm(np.atleast_2d(coeffs.T).T, axis=1) if coeffs.ndim > 1 else np.abs(coeffs)
    masks = np.arange(norms.size)
    for m, s, t, v in zip(masks, _popcount(masks), top_coordinate(masks), norms):
        w.writerow([int(m), int(s), int(t), repr(float(v))])
    return buf.getvalue()


# -- block product spaces ------------------------------------------------------------

@dataclass(frozen=True)
class ProductSpace:
    """Finite truncation of a product of block spaces.

    Level n is a tuple (q_{n,1}, ..., q_{n,l_n}); its points are pairs
    (block s, root index r) with weight 1/(l_n q_{n,s}). A point of the
    product is a tuple of such pairs, one per level.
    """

    levels: tuple

    def __post_init__(self):
        lv = tuple(tuple(int(q) for q in level) for level in self.levels)
        if not lv or any(len(level) == 0 for level in lv):
            raise ValueError("every level needs at least one block")
        if any(q < 2 for level in lv for q in level):
            raise ValueError("block orders must be >= 2")
        size = math.prod(sum(level) for level in lv)
        if size > PRODUCT_SIZE_LIMIT:
            raise ValueError(f"product size {size} exceeds guard {PRODUCT_SIZE_LIMIT}")
        object.__setattr__(self, "levels", lv)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def l(self, n: int) -> int:
        return len(self.levels[n - 1])

    def w(self, n: int) -> int:
        return sum(self.levels[n - 1])

    @property
    def size(self) -> int:
        return math.prod(self.w(n) for n in range(1, self.depth + 1))

    def level_points(self, n: int) -> list[tuple[int, int]]:
        return [(s, r) for s, q in enumerate(self.levels[n - 1]) for r in range(q)]

    def level_weights(self, n: int) -> np.ndarray:
        lv = self.levels[n - 1]
        return np.array([1.0 / (len(lv) * q) for q in lv for _ in range(q)])

    def level_characters(self, n: int) -> np.ndarray:
        """Rows e_(s, gamma) evaluated on the level points (s', r)."""
        lv = self.levels[n - 1]
        l_n = len(lv)
        pts = self.level_points(n)
        rows = []
        for s, q in enumerate(lv):
            for g in range(q):
                row = np.zeros(len(pts), complex)
                for k, (s2, r) in enumerate(pts):
                    if s2 == s:
                        row[k] = math.sqrt(l_n) * np.exp(2j * math.pi * g * r / q)
                rows.append(row)
        return np.array(rows)

    def level_labels(self, n: int) -> list[tuple[int, int]]:
        """(block s, character index gamma) for each row of level_characters."""
        return [(s, g) for s, q in enumerate(self.levels[n - 1]) for g in range(q)]

    def points(self) -> list[tuple]:
        return list(itertools.product(*(self.level_points(n) for n in range(1, self.depth + 1))))

    def weights(self) -> np.ndarray:
        out = np.ones(1)
        for n in range(1, self.depth + 1):
            out = np.kron(out, self.level_weights(n))
        return out

    def characters(self) -> np.ndarray:
        """Rows e_gamma for all tuples gamma, columns indexed like points()."""
        out = np.ones((1, 1), complex)
        for n in range(1, self.depth + 1):
            out = np.kron(out, self.level_characters(n))
        return out

    def character_labels(self) -> list[tuple]:
        return list(itertools.product(*(self.level_labels(n) for n in range(1, self.depth + 1))))

    def describe(self) -> str:
        return json.dumps({"levels": [list(lv) for lv in self.levels], "size": self.size,
                           "l": [self.l(n) for n in range(1, self.depth + 1)],
                           "w": [self.w(n) for n in range(1, self.depth + 1)]})


def product_space(levels: Sequence[Sequence[int]]) -> ProductSpace:
    return ProductSpace(tuple(tuple(lv) for lv in levels))


def basis_check(ps: ProductSpace) -> float:
    """max |Gram - I| for the characters under the product weights.

    The full Gram matrix is formed up to FULL_GRAM_LIMIT points; beyond that
    the Gram matrix is the Kronecker product of the level Gram matrices and
    its deviation is evaluated factorwise.
    """
    if ps.size <= FULL_GRAM_LIMIT:
        E = ps.characters()
        G = (E * ps.weights()) @ E.conj().T
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))
    grams = []
    for n in range(1, ps.depth + 1):
        E = ps.level_characters(n)
        grams.append((E * ps.level_weights(n)) @ E.conj().T)
    # |kron(G) - I| entrywise: diagonal products and off-diagonal products
    diag_max = math.prod(float(np.max(np.abs(np.diag(g)))) for g in grams)
    diag_min = math.prod(float(np.min(np.abs(np.diag(g)))) for g in grams)
    off = 0.0
    for k, g in enumerate(grams):
        o = float(np.max(np.abs(g - np.diag(np.diag(g)))))
        others = math.prod(float(np.max(np.abs(h))) for j, h in enumerate(grams) if j != k)
        off = max(off, o * others)
    return max(abs(diag_max - 1.0), abs(1.0 - diag_min), off)


def dq_metric(ps: ProductSpace, omega: Sequence[tuple[int, int]],
              omega2: Sequence[tuple[int, int]]) -> float | None:
    """Partially defined distance; None when the first difference crosses blocks."""
    if len(omega) != ps.depth or len(omega2) != ps.depth:
        raise ValueError("points must have one coordinate per level")
    for n, (a, b) in enumerate(zip(omega, omega2), start=1):
        if tuple(a) != tuple(b):
            if a[0] != b[0]:
                return None
            prefix = math.prod(ps.w(k) for k in range(1, n))
            return 1.0 / (prefix * ps.l(n) ** 0.25 * ps.levels[n - 1][a[0]])
    raise ValueError("points must be distinct")


def product_super_lipschitz_constant(ps: ProductSpace, values: np.ndarray) -> float:
    """Smallest C with ||E(w) - E(w')|| <= C d(w, w')^2 over all defined pairs."""
    pts = ps.points()
    vals = np.atleast_2d(np.asarray(values, complex).T).T
    X = np.hstack([vals.real, vals.imag])
    D = cdist(X, X)
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = dq_metric(ps, pts[i], pts[j])
            if d is not None:
                best = max(best, D[i, j] / d ** 2)
    return best


def product_fourier(ps: ProductSpace, values: np.ndarray) -> np.ndarray:
    """E_hat(gamma) = sum_w m(w) e_gamma(w) E(w), rows indexed like character_labels()."""
    vals = np.atleast_2d(np.asarray(values, complex).T).T
    return (ps.characters() * ps.weights()) @ vals


@dataclass
class FactCheck:
    passed: bool
    worst_ratio: float
    checked: int
    skipped: int


def product_fact_check(ps: ProductSpace, values: np.ndarray, C: float | None = None,
                       slack: float = 1e-9) -> FactCheck:
    """Check ||E_hat(gamma)|| <= (C/l_N) sqrt(l_1...l_{N-1}) prod_{n<N} w_n^-2 q_{N,s}^-2.

    N is the last level where gamma carries a nontrivial character. Tuples
    whose later levels carry a block indicator of a multi-block level are not
    of this form and are skipped (counted in ``skipped``).
    """
    if C is None:
        C = product_super_lipschitz_constant(ps, values)
    coeffs = product_fourier(ps, values)
    norms = np.linalg.norm(coeffs, axis=1)
    worst, checked, skipped = 0.0, 0, 0
    for label, nrm in zip(ps.character_labels(), norms):
        nontriv = [n for n, (s, g) in enumerate(label, start=1) if g != 0]
        if not nontriv:
            continue
        N = nontriv[-1]
        if any(ps.l(n) > 1 for n in range(N + 1, ps.depth + 1)):
            skipped += 1
            continue
        s = label[N - 1][0]
        bound = (C / ps.l(N)) * math.sqrt(math.prod(ps.l(n) for n in range(1, N)))
        bound *= math.prod(ps.w(n) ** -2.0 for n in range(1, N)) / ps.levels[N - 1][s] ** 2
        checked += 1
        if bound > 0:
            worst = max(worst, nrm / bound)
        elif nrm > 0:
            worst = math.inf
    return FactCheck(worst <= 1.0 + slack, worst, checked, skipped)
