"""Pseudo-hyperbolic cone metrics and their discrete curvature.

A cone metric assigns one positive length to every edge class of a
triangulation; each tetrahedron inherits six lengths through the quotient
map and must be an admissible hyperideal tetrahedron.  The metric is
hyperbolic along an edge class when the dihedral angles of all corners
glued around it sum to 2*pi; the curvature K_i = 2*pi - S_i measures the
failure.

The curvature Jacobian dK/dx assembles per-tetrahedron angle Jacobians
(symmetric positive definite) through the quotient map with a sign flip, so
it is symmetric negative definite on the admissible set.  Consequently

    H(x) = 2 * sum_t V_t(x_t) - sum_i K_i x_i

(V_t the per-tetrahedron volume potential) has gradient exactly -K and
positive definite Hessian -dK/dx: the curvature flow dx/dt = K is the
negative gradient flow of the locally convex energy H, whose critical
points are exactly the hyperbolic metrics (all angle sums 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tetgeom
from .errors import InadmissibleShapeError
from .triangulation import EDGE_VERTEX_PAIRS, Triangulation


@dataclass(frozen=True)
class ConeMetric:
    """Edge-class lengths on a triangulation, one positive float per class."""

    tri: Triangulation
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.shape != (self.tri.n_edges,):
            raise ValueError(
                f"metric needs {self.tri.n_edges} lengths, got shape {x.shape}")
        if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
            bad = int(np.argmin(np.where(np.isfinite(x), x, -np.inf)))
            raise InadmissibleShapeError(
                f"edge length {bad} is {float(x[bad])!r}, not positive and finite",
                reason="nonpositive_length", edge=bad, value=float(x[bad]))
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    def with_lengths(self, x) -> "ConeMetric":
        return ConeMetric(tri=self.tri, x=np.asarray(x, dtype=float))


@dataclass(frozen=True)
class CurvatureState:
    """Curvature data of a metric; J and the energy fields are optional extras."""

    K: np.ndarray
    S: np.ndarray
    J: Optional[np.ndarray] = None
    H_val: Optional[float] = None
    H_grad: Optional[np.ndarray] = None


def class_matrix(tri: Triangulation) -> np.ndarray:
    """Quotient map as an int array: entry (t, e) is the edge class of (t, e)."""
    return np.array(tri.edge_class_of, dtype=int).reshape(tri.tet_count, 6)


def tet_length_matrix(m: ConeMetric) -> np.ndarray:
    """Per-tetrahedron length vectors, shape (tet_count, 6)."""
    return m.x[class_matrix(m.tri)]


def tet_angle_matrix(m: ConeMetric) -> np.ndarray:
    """Per-tetrahedron dihedral angles, shape (tet_count, 6).

    Raises InadmissibleShapeError with the tetrahedron index filled in when
    some tetrahedron degenerates under the metric.
    """
    X = tet_length_matrix(m)
    ok = np.atleast_1d(tetgeom.is_admissible(X))
    if not ok.all():
        t = int(np.argmax(~ok))
        try:
            tetgeom.angles_from_lengths(X[t])
        except InadmissibleShapeError as exc:
            raise InadmissibleShapeError(
                f"tetrahedron {t}: {exc}", reason=exc.reason, edge=exc.edge,
                vertex=exc.vertex, value=exc.value, tet=t) from None
        raise InadmissibleShapeError(f"tetrahedron {t} is inadmissible", tet=t)
    return tetgeom.angles_from_lengths(X)


def _scatter_sums(tri: Triangulation, A: np.ndarray) -> np.ndarray:
    S = np.zeros(tri.n_edges)
    np.add.at(S, class_matrix(tri).ravel(), A.ravel())
    return S


def curvature(m: ConeMetric) -> CurvatureState:
    """Angle sums S and curvatures K = 2*pi - S per edge class."""
    S = _scatter_sums(m.tri, tet_angle_matrix(m))
    return CurvatureState(K=2.0 * math.pi - S, S=S)


def curvature_jacobian(m: ConeMetric) -> np.ndarray:
    """dK/dx, symmetric negative definite, assembled tetrahedron by tetrahedron."""
    X = tet_length_matrix(m)
    tet_angle_matrix(m)  # admissibility with a located error
    Jt = tetgeom.jacobian_angles_lengths(X)
    cm = class_matrix(m.tri)
    n = m.tri.n_edges
    J = np.zeros((n, n))
    for t in range(m.tri.tet_count):
        np.add.at(J, (cm[t][:, None], cm[t][None, :]), -Jt[t])
    return J


def tet_potentials(m: ConeMetric) -> np.ndarray:
    """Per-tetrahedron volume potentials, relative to the unit regular shape."""
    X = tet_length_matrix(m)
    tet_angle_matrix(m)
    return np.array([tetgeom.schlafli_potential(X[t])
                     for t in range(m.tri.tet_count)])


def energy(m: ConeMetric) -> tuple:
    """The convex energy H and its gradient -K.

    H decreases along the curvature flow and is minimized exactly at the
    hyperbolic metric.
    """
    state = curvature(m)
    H_val = 2.0 * float(tet_potentials(m).sum()) - float(state.K @ m.x)
    return H_val, -state.K


def full_state(m: ConeMetric) -> CurvatureState:
    state = curvature(m)
    J = curvature_jacobian(m)
    H_val = 2.0 * float(tet_potentials(m).sum()) - float(state.K @ m.x)
    return CurvatureState(K=state.K, S=state.S, J=J, H_val=H_val,
                          H_grad=-state.K)


def metric_margin(m: ConeMetric) -> tuple:
    """Smallest admissibility margin over all tetrahedra, with its witness.

    Returns (margin, witness) where the witness names the tetrahedron and
    the corner (edge + vertex) or vertex sum that attains the margin.
    """
    X = tet_length_matrix(m)
    margins = np.atleast_1d(tetgeom.admissibility_margin(X))
    t = int(np.argmin(margins))
    pl = tetgeom._pipeline(X[t])
    corner = np.where(np.isfinite(pl.cosines), 1.0 - np.abs(pl.cosines), -np.inf)
    slack = np.where(np.isfinite(pl.vsums), math.pi - pl.vsums, -np.inf)
    if corner.min() <= slack.min():
        e, s = map(int, divmod(int(np.argmin(corner)), 2))
        witness = {"tet": t, "kind": "corner_cosine", "edge": e,
                   "vertex": EDGE_VERTEX_PAIRS[e][s],
                   "value": float(pl.cosines[e, s])}
    else:
        v = int(np.argmin(slack))
        witness = {"tet": t, "kind": "vertex_sum", "vertex": v,
                   "value": float(pl.vsums[v])}
    return float(margins[t]), witness
