"""Discretized eigenvector fields over weighted node sets.

A field is a finite list of nodes, each carrying a weight m_j > 0, an angle
phi_j (the eigenvalue is exp(i phi_j)) and a vector E_j. It induces

    K f   = sum_j m_j f_j E_j                 (node functions -> vectors)
    K* x* = j -> conj(<x*, E_j>)              (functionals -> node functions)

with <f, g> = sum_j m_j f_j conj(g_j) on node functions, so that
<K f, x*> = <f, K* x*>.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (DefectReport, KalischSpec, ShiftSpec, TruncatedOperator,
                        kalisch_grid_eigenvectors, shift_eigenvectors, spanning_defect)

TWO_PI = 2.0 * math.pi
EPS = 1e-300


@dataclass(frozen=True)
class EigenField:
    weights: np.ndarray
    angles: np.ndarray
    vectors: np.ndarray
    operator_ref: str = ""
    tol: float = math.inf

    def __post_init__(self):
        m = np.asarray(self.weights, float).ravel()
        phi = np.mod(np.asarray(self.angles, float).ravel(), TWO_PI)
        E = np.asarray(self.vectors, complex)
        if E.ndim != 2 or E.shape[0] != m.size or phi.size != m.size:
            raise ValueError("weights, angles and vectors disagree in node count")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("node weights must be finite and nonnegative")
        if not np.all(np.isfinite(E)):
            raise ValueError("field vectors must be finite")
        object.__setattr__(self, "weights", m)
        object.__setattr__(self, "angles", phi)
        object.__setattr__(self, "vectors", E)

    @property
    def n_nodes(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def is_degenerate(self) -> bool:
        return not np.any((self.weights > 0)[:, None] & (self.vectors != 0))

    def l2_norm(self, f) -> float:
        f = np.asarray(f, complex)
        return float(math.sqrt(np.sum(self.weights * np.abs(f) ** 2)))

    def l2_inner(self, f, g) -> complex:
        return complex(np.sum(self.weights * np.asarray(f, complex) * np.conj(g)))

    def eigen_residual(self, op: TruncatedOperator) -> float:
        """max_j ||T E_j - exp(i phi_j) E_j|| / max(||E_j||, eps)."""
        TE = self.vectors @ op.matrix.T
        diff = TE - self.eigenvalues[:, None] * self.vectors
        norms = np.maximum(np.linalg.norm(self.vectors, axis=1), EPS)
        return float(np.max(np.linalg.norm(diff, axis=1) / norms))

    def gamma_matrix(self) -> np.ndarray:
        """N x M matrix whose columns are sqrt(m_j) E_j."""
        return (np.sqrt(self.weights)[:, None] * self.vectors).T

    def merge(self, other: "EigenField", alpha: float = 1.0, beta: float = 1.0) -> "EigenField":
        """Disjoint union with weights alpha^2 m and beta^2 m'."""
        if other.dim != self.dim:
            raise ValueError("fields live in different dimensions")
        return EigenField(np.concatenate([alpha ** 2 * self.weights, beta ** 2 * other.weights]),
                          np.concatenate([self.angles, other.angles]),
                          np.vstack([self.vectors, other.vectors]),
                          self.operator_ref or other.operator_ref,
                          max(self.tol, other.tol) if math.isfinite(self.tol + other.tol) else math.inf)

    def restrict(self, keep) -> "EigenField":
        keep = np.asarray(keep)
        return EigenField(self.weights[keep], self.angles[keep], self.vectors[keep],
                          self.operator_ref, self.tol)

    def to_json(self) -> str:
        nodes = []
        for m, phi, vec in zip(self.weights, self.angles, self.vectors):
            nodes.append([float(m), float(phi), [[float(z.real), float(z.imag)] for z in vec]])
        return json.dumps({"operator": self.operator_ref, "nodes": nodes})

    @classmethod
    def from_json(cls, text: str) -> "EigenField":
        obj = json.loads(text)
        nodes = obj["nodes"]
        m = np.array([n[0] for n in nodes], float)
        phi = np.array([n[1] for n in nodes], float)
        vecs = np.array([[complex(a, b) for a, b in n[2]] for n in nodes], complex)
        return cls(m, phi, vecs.reshape(len(nodes), -1), obj.get("operator", ""))


def k_apply(field: EigenField, f) -> np.ndarray:
    f = np.asarray(f, complex).ravel()
    if f.size != field.n_nodes:
        raise ValueError(f"node function has {f.size} values, field has {field.n_nodes} nodes")
    return (field.weights * f) @ field.vectors


def k_adjoint(field: EigenField, xstar) -> np.ndarray:
    """Node function j -> conj(<x*, E_j>); a stack of functionals gives a stack of rows."""
    xs = np.asarray(xstar, complex)
    if xs.shape[-1] != field.dim:
        raise ValueError("functional length does not match field dimension")
    return np.conj(xs @ field.vectors.T)


@dataclass
class ResidualReport:
    value: float
    degenerate: bool = False

    def __float__(self):
        return self.value


def default_node_probes(field: EigenField, count: int = 8, seed: int = 0) -> np.ndarray:
    """Node functions used to test the intertwining relation: low characters
    of the eigenvalue angle plus seeded random functions."""
    rng = np.random.default_rng(seed)
    chars = np.exp(-1j * np.outer(np.arange(count), field.angles))
    rand = rng.standard_normal((count, field.n_nodes)) + 1j * rng.standard_normal((count, field.n_nodes))
    return np.vstack([chars, rand])


def intertwining_residual(op: TruncatedOperator, field: EigenField,
                          probes: np.ndarray | None = None) -> ResidualReport:
    """max over probes of ||T K f - K(exp(i phi) f)|| / ||f||_{L2(m)}."""
    if op.dim != field.dim:
        raise ValueError("operator and field dimensions differ")
    if field.is_degenerate():
        return ResidualReport(0.0, True)
    F = default_node_probes(field) if probes is None else np.atleast_2d(np.asarray(probes, complex))
    KF = (F * field.weights) @ field.vectors
    KphiF = (F * field.eigenvalues * field.weights) @ field.vectors
    diff = KF @ op.matrix.T - KphiF
    norms = np.sqrt(np.sum(field.weights * np.abs(F) ** 2, axis=1))
    ok = norms > 0
    vals = np.linalg.norm(diff[ok], axis=1) / norms[ok]
    return ResidualReport(float(np.max(vals)) if vals.size else 0.0)


def m_spanning_defect(field: EigenField, exclude: Sequence[int] = ()) -> DefectReport:
    """Spanning defect of the field vectors, ignoring weight-zero and excluded nodes."""
    if field.n_nodes == 0:
        raise ValueError("field has no nodes")
    keep = field.weights > 0
    keep[list(exclude)] = False
    vecs = field.vectors[keep]
    if vecs.shape[0] == 0 or not np.any(vecs):
        return DefectReport(1.0, 0, degenerate=True)
    return spanning_defect(vecs, field.dim)


# -- field builders ------------------------------------------------------------------

def shift_field(spec: ShiftSpec, angles: Sequence[float], weights: Sequence[float] | None = None,
                ) -> EigenField:
    angles = np.asarray(angles, float)
    if weights is None:
        weights = np.full(angles.size, 1.0 / angles.size)
    E = shift_eigenvectors(spec, np.exp(1j * angles))
    tail_tol = float(np.abs(spec.inverse_products()[-1]) * np.abs(spec.full_weights[-1]))
    return EigenField(np.asarray(weights, float), angles, E, "weighted-backward-shift",
                      tol=max(tail_tol, 1e-14))


def uniform_shift_field(spec: ShiftSpec, n_nodes: int) -> EigenField:
    """Shift eigenvectors at the n_nodes-th roots of unity with equal weights."""
    return shift_field(spec, TWO_PI * np.arange(n_nodes) / n_nodes)


def arc_nodes(start: float, length: float, n_nodes: int, density: str = "hann"
              ) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint nodes on an arc with probability weights.

    ``hann`` weights follow sin^2 across the arc, a smooth density with full
    support on the open arc; ``lebesgue`` weights are uniform.
    """
    u = (np.arange(n_nodes) + 0.5) / n_nodes
    angles = start + length * u
    if density == "hann":
        w = np.sin(np.pi * u) ** 2
    elif density == "lebesgue":
        w = np.ones(n_nodes)
    else:
        raise ValueError(f"unknown arc density {density!r}")
    return angles, w / w.sum()


def kalisch_arc_field(spec: KalischSpec, start: float, stop: float,
                      density: str = "lebesgue") -> EigenField:
    """Exact discrete eigenvectors for the grid eigenvalues e^{i t_m}, t_m in [start, stop]."""
    t = spec.nodes
    idx = np.nonzero((t >= start) & (t <= stop))[0]
    if idx.size == 0:
        raise ValueError("arc contains no grid eigenvalues")
    if density == "lebesgue":
        w = np.full(idx.size, 1.0 / idx.size)
    elif density == "hann":
        u = (t[idx] - start) / (stop - start)
        w = np.sin(np.pi * u) ** 2
        w /= w.sum()
    else:
        raise ValueError(f"unknown arc density {density!r}")
    E = kalisch_grid_eigenvectors(spec, idx)
    return EigenField(w, t[idx], E, "kalisch", tol=1e-10)
