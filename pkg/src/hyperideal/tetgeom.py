"""Geometry of a single hyperideal tetrahedron from its six edge lengths.

A hyperideal tetrahedron is the compact convex body obtained from a
combinatorial tetrahedron whose four vertices sit beyond the ideal boundary
of hyperbolic 3-space by truncating along the four polar planes.  It is
determined up to isometry by the lengths x_0..x_5 of its six core edges,
indexed by vertex pairs in lexicographic order 01, 02, 03, 12, 13, 23 (so
opposite edge pairs are (0,5), (1,4), (2,3)).  Each face is then a
right-angled hexagon and each truncation cross-section a hyperbolic
triangle.

Intermediate quantities:

* arcs: the 12 truncation-triangle sides, indexed by (vertex v, face f)
  with f != v in lexicographic order; arc (v, f) is the segment cut out of
  the triangle at v by the face f.  Writing {j, k} for the remaining two
  vertices, the right-angled-hexagon relation gives

      cosh t(v,f) = (cosh x_jk + cosh x_vj cosh x_vk)
                    / (sinh x_vj sinh x_vk),

  a quotient that is provably > 1 for any positive lengths, so every arc
  exists; degeneration shows up later, in the corner cosines.

* dihedral angles: the angle a_e along edge e = {v, w} equals the angle of
  the truncation triangle at v at its vertex on e, with cosine

      (cosh t_b cosh t_c - cosh t_o) / (sinh t_b sinh t_c)

  for the two adjacent arcs b, c and the opposite arc o at v.  The same
  angle recomputed at w must agree; both are averaged.

Not every positive length vector is admissible.  Admissibility is decided
operationally: every corner cosine strictly inside (-1, 1) with a small
guard, the two endpoint computations in agreement, and the three angles at
each vertex summing to less than pi.  An independent Gram-matrix oracle
(`minkowski_oracle`) cross-checks this classification.

All core routines are vectorized over arbitrary leading batch dimensions;
a length vector is any float array of shape (..., 6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InadmissibleShapeError
from .triangulation import EDGE_VERTEX_PAIRS, VERTEX_EDGES, edge_index

COSINE_GUARD = 1e-9     # corner cosines must stay this far inside (-1, 1)
ENDPOINT_TOL = 1e-8     # max disagreement between the two endpoint angles
ORACLE_TOL = 1e-9       # trig pipeline vs Gram-matrix oracle
QUADRATURE_TOL = 1e-10  # absolute tolerance of the volume-potential quadrature
NEWTON_TOL = 1e-12      # residual inf-norm for the angle -> length inversion
NEWTON_MAX_ITER = 200
MAX_LENGTH = 350.0      # keeps every cosh/sinh product finite in float64

ARC_VERTEX_FACE = tuple((v, f) for v in range(4) for f in range(4) if f != v)
_ARC_INDEX = {vf: i for i, vf in enumerate(ARC_VERTEX_FACE)}


def _build_arc_edges():
    rows = []
    for (v, f) in ARC_VERTEX_FACE:
        j, k = [w for w in range(4) if w not in (v, f)]
        rows.append([edge_index(v, j), edge_index(v, k), edge_index(j, k)])
    return np.array(rows)


def _build_corner_arcs():
    # For edge e = {v, w} and endpoint side s (0 at v, 1 at w): the two arcs
    # adjacent to the angle and the arc opposite it, all at that endpoint.
    b = np.zeros((6, 2), dtype=int)
    c = np.zeros((6, 2), dtype=int)
    o = np.zeros((6, 2), dtype=int)
    for e, (v, w) in enumerate(EDGE_VERTEX_PAIRS):
        u1, u2 = [z for z in range(4) if z not in (v, w)]
        for s, (p, q) in enumerate(((v, w), (w, v))):
            b[e, s] = _ARC_INDEX[(p, u1)]
            c[e, s] = _ARC_INDEX[(p, u2)]
            o[e, s] = _ARC_INDEX[(p, q)]
    return b, c, o


_ARC_E = _build_arc_edges()
_CB, _CC, _CO = _build_corner_arcs()
_VERT_E = np.array(VERTEX_EDGES)


def _as_lengths(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (6,):
        raise ValueError(f"length vector must have trailing dimension 6, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("edge lengths must be finite")
    if np.any(x > MAX_LENGTH):
        raise ValueError(f"edge lengths above {MAX_LENGTH} exceed the supported range")
    if np.any(x <= 0.0):
        flat = x.reshape(-1, 6)
        row = int(np.argmax(np.any(flat <= 0.0, axis=1)))
        e = int(np.argmax(flat[row] <= 0.0))
        raise InadmissibleShapeError(
            f"edge {e} has non-positive length {flat[row][e]!r}",
            reason="nonpositive_length", edge=e, value=float(flat[row][e]))
    return x


class _Pipeline(NamedTuple):
    ch: np.ndarray      # (..., 6) cosh of lengths
    sh: np.ndarray      # (..., 6)
    u: np.ndarray       # (..., 12) cosh of arcs
    su: np.ndarray      # (..., 12) sinh of arcs
    cosines: np.ndarray  # (..., 6, 2) corner cosines, per endpoint
    angles2: np.ndarray  # (..., 6, 2) angles per endpoint (clipped cosines)
    angles: np.ndarray  # (..., 6) endpoint average
    vsums: np.ndarray   # (..., 4) angle sum at each vertex
    ok: np.ndarray      # (...) admissibility mask
    margin: np.ndarray  # (...) min corner / vertex-sum slack


def _pipeline(x: np.ndarray) -> _Pipeline:
    with np.errstate(all="ignore"):
        ch, sh = np.cosh(x), np.sinh(x)
        coth = ch / sh
        ia, ib, ic = _ARC_E[:, 0], _ARC_E[:, 1], _ARC_E[:, 2]
        # coth*coth + cosh/(sinh*sinh) avoids overflow of cosh*cosh
        u = coth[..., ia] * coth[..., ib] + ch[..., ic] / (sh[..., ia] * sh[..., ib])
        su = np.sqrt(np.maximum(u * u - 1.0, 0.0))
        ub, uc, uo = u[..., _CB], u[..., _CC], u[..., _CO]
        cosines = (ub * uc - uo) / (su[..., _CB] * su[..., _CC])
        angles2 = np.arccos(np.clip(cosines, -1.0, 1.0))
        angles = 0.5 * (angles2[..., 0] + angles2[..., 1])
        vsums = angles[..., _VERT_E].sum(axis=-1)
        corner_ok = np.abs(cosines) < 1.0 - COSINE_GUARD
        corner_ok &= np.isfinite(cosines)
        agree_ok = np.abs(angles2[..., 0] - angles2[..., 1]) < ENDPOINT_TOL
        vert_ok = vsums < math.pi
        ok = (corner_ok.all(axis=(-2, -1)) & agree_ok.all(axis=-1)
              & vert_ok.all(axis=-1))
        corner_margin = np.where(np.isfinite(cosines), 1.0 - np.abs(cosines),
                                 -np.inf).min(axis=(-2, -1))
        margin = np.minimum(corner_margin, (math.pi - vsums).min(axis=-1))
    return _Pipeline(ch, sh, u, su, cosines, angles2, angles, vsums, ok, margin)


def _raise_inadmissible(x: np.ndarray, pl: _Pipeline) -> None:
    flat_ok = np.atleast_1d(pl.ok).reshape(-1)
    if flat_ok.all():
        return
    row = int(np.argmax(~flat_ok))
    cos = pl.cosines.reshape(-1, 6, 2)[row]
    ang2 = pl.angles2.reshape(-1, 6, 2)[row]
    vs = pl.vsums.reshape(-1, 4)[row]
    bad = ~((np.abs(cos) < 1.0 - COSINE_GUARD) & np.isfinite(cos))
    if bad.any():
        e, s = map(int, divmod(int(np.argmax(bad)), 2))
        v = EDGE_VERTEX_PAIRS[e][s]
        raise InadmissibleShapeError(
            f"corner cosine at edge {e}, vertex {v} is {float(cos[e, s])!r}, "
            f"outside (-1, 1) by more than the {COSINE_GUARD} guard",
            reason="corner_cosine", edge=e, vertex=v, value=float(cos[e, s]))
    dis = np.abs(ang2[:, 0] - ang2[:, 1])
    if (dis >= ENDPOINT_TOL).any():
        e = int(np.argmax(dis >= ENDPOINT_TOL))
        raise InadmissibleShapeError(
            f"angle at edge {e} disagrees between its endpoints by {dis[e]:.3e}",
            reason="endpoint_disagreement", edge=e, value=float(dis[e]))
    v = int(np.argmax(vs >= math.pi))
    raise InadmissibleShapeError(
        f"angles at vertex {v} sum to {vs[v]!r} >= pi",
        reason="vertex_sum", vertex=v, value=float(vs[v]))


def arcs_from_lengths(x) -> np.ndarray:
    """The 12 truncation-triangle sides, ordered by (vertex, face)."""
    x = _as_lengths(x)
    pl = _pipeline(x)
    return np.arccosh(pl.u)


def is_admissible(x) -> np.ndarray:
    """Boolean mask (scalar for a single shape): do the lengths define a tetrahedron?"""
    pl = _pipeline(_as_lengths(x))
    return pl.ok


def admissibility_margin(x) -> np.ndarray:
    """min over corners of 1 - |cosine| and over vertices of pi - angle sum.

    Positive and above the guards on the admissible set; <= 0 or negative
    when a corner has degenerated.  Used by the flow as its stopping gauge.
    """
    pl = _pipeline(_as_lengths(x))
    return pl.margin


def angles_from_lengths(x) -> np.ndarray:
    """Dihedral angles (..., 6); raises InadmissibleShapeError with the offending corner."""
    x = _as_lengths(x)
    pl = _pipeline(x)
    _raise_inadmissible(x, pl)
    return pl.angles


def vertex_angle_sums(angles) -> np.ndarray:
    """Sums of the three dihedral angles meeting at each vertex, shape (..., 4)."""
    a = np.asarray(angles, dtype=float)
    return a[..., _VERT_E].sum(axis=-1)


def angles_strictly_feasible(angles) -> np.ndarray:
    """Mask: all six angles in (0, pi) and every vertex sum strictly below pi."""
    a = np.asarray(angles, dtype=float)
    ok = np.isfinite(a).all(axis=-1) & (a > 0.0).all(axis=-1) & (a < math.pi).all(axis=-1)
    return ok & (vertex_angle_sums(a) < math.pi).all(axis=-1)


def validate_angles(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (6,):
        raise ValueError(f"angle vector must have shape (6,), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    if np.any(a <= 0.0) or np.any(a >= math.pi):
        e = int(np.argmax((a <= 0.0) | (a >= math.pi)))
        raise InadmissibleShapeError(
            f"angle at edge {e} is {a[e]!r}, outside the open interval (0, pi)",
            reason="angle_range", edge=e, value=float(a[e]))
    vs = vertex_angle_sums(a)
    if np.any(vs >= math.pi):
        v = int(np.argmax(vs >= math.pi))
        raise InadmissibleShapeError(
            f"angles at vertex {v} sum to {vs[v]!r}, not strictly below pi",
            reason="vertex_sum", vertex=v, value=float(vs[v]))
    return a


def _arc_length_jacobian(pl: _Pipeline, x: np.ndarray) -> np.ndarray:
    """d(arcs)/d(lengths), shape (..., 12, 6)."""
    ia, ib, ic = _ARC_E[:, 0], _ARC_E[:, 1], _ARC_E[:, 2]
    ca, sa = pl.ch[..., ia], pl.sh[..., ia]
    cb, sb = pl.ch[..., ib], pl.sh[..., ib]
    sc = pl.sh[..., ic]
    u = pl.u
    dQa = cb / sb - u * (ca / sa)
    dQb = ca / sa - u * (cb / sb)
    dQc = sc / (sa * sb)
    f = 1.0 / pl.su
    T = np.zeros(x.shape[:-1] + (12, 6))
    rows = np.arange(12)
    T[..., rows, ia] = f * dQa
    T[..., rows, ib] = f * dQb
    T[..., rows, ic] = f * dQc
    return T


def _angle_arc_jacobian(pl: _Pipeline, x: np.ndarray, side: int) -> np.ndarray:
    """d(angles at one endpoint)/d(arcs), shape (..., 6, 12)."""
    b, c, o = _CB[:, side], _CC[:, side], _CO[:, side]
    u, su = pl.u, pl.su
    R = pl.cosines[..., side]
    g = -1.0 / np.sqrt(1.0 - R * R)
    dRb = u[..., c] / su[..., c] - R * (u[..., b] / su[..., b])
    dRc = u[..., b] / su[..., b] - R * (u[..., c] / su[..., c])
    dRo = -su[..., o] / (su[..., b] * su[..., c])
    D = np.zeros(x.shape[:-1] + (6, 12))
    rows = np.arange(6)
    D[..., rows, b] = g * dRb
    D[..., rows, c] = g * dRc
    D[..., rows, o] = g * dRo
    return D


def _jacobian_from_pipeline(pl: _Pipeline, x: np.ndarray) -> np.ndarray:
    T = _arc_length_jacobian(pl, x)
    D = 0.5 * (_angle_arc_jacobian(pl, x, 0) + _angle_arc_jacobian(pl, x, 1))
    return D @ T


def jacobian_angles_lengths(x) -> np.ndarray:
    """d(angles)/d(lengths), shape (..., 6, 6); symmetric positive definite."""
    x = _as_lengths(x)
    pl = _pipeline(x)
    _raise_inadmissible(x, pl)
    return _jacobian_from_pipeline(pl, x)


@dataclass(frozen=True)
class TetShape:
    """A fully evaluated hyperideal tetrahedron."""

    lengths: np.ndarray
    arcs: np.ndarray
    angles: np.ndarray
    jac_angles_lengths: np.ndarray
    jac_lengths_angles: np.ndarray


def shape(x) -> TetShape:
    x = _as_lengths(np.asarray(x, dtype=float))
    if x.shape != (6,):
        raise ValueError("shape() takes a single length vector")
    pl = _pipeline(x)
    _raise_inadmissible(x, pl)
    J = _jacobian_from_pipeline(pl, x)
    return TetShape(lengths=x.copy(), arcs=np.arccosh(pl.u), angles=pl.angles,
                    jac_angles_lengths=J, jac_lengths_angles=np.linalg.inv(J))


def _newton_lengths(target: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Solve angles(x) = target row-wise by damped Newton.

    target, x0: (m, 6).  Rows of x0 that are not admissible fall back to the
    all-ones shape, which always is.  Steps are halved per row until the
    residual decreases and the iterate stays admissible.
    """
    target = np.asarray(target, dtype=float)
    x = np.array(x0, dtype=float)
    m = x.shape[0]
    pl = _pipeline(x)
    bad = ~pl.ok
    if bad.any():
        x[bad] = 1.0
        pl = _pipeline(x)
    res = pl.angles - target
    rnorm = np.abs(res).max(axis=1)
    for _ in range(NEWTON_MAX_ITER):
        active = rnorm >= NEWTON_TOL
        if not active.any():
            return x
        J = _jacobian_from_pipeline(_pipeline(x[active]), x[active])
        try:
            step = np.linalg.solve(J, -res[active][..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian in length solve: {exc}", last=x)
        idx = np.flatnonzero(active)
        lam = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _halving in range(60):
            if not pending.any():
                break
            rows = idx[pending]
            cand = x[rows] + lam[pending, None] * step[pending]
            pos = (cand > 0.0).all(axis=1) & (cand <= MAX_LENGTH).all(axis=1)
            cpl = _pipeline(np.where(pos[:, None], cand, 1.0))
            cres = cpl.angles - target[rows]
            crn = np.abs(cres).max(axis=1)
            good = pos & cpl.ok & (crn < rnorm[rows])
            gr = rows[good]
            x[gr] = cand[good]
            res[gr] = cres[good]
            rnorm[gr] = crn[good]
            sub = np.flatnonzero(pending)
            pending[sub[good]] = False
            lam[sub[~good]] *= 0.5
        if pending.any():
            raise ConvergenceError(
                "length solve stalled: no damped step improves the residual",
                last=x)
    raise ConvergenceError(
        f"length solve did not reach {NEWTON_TOL} in {NEWTON_MAX_ITER} iterations",
        last=x)


def lengths_from_angles(a, initial=None) -> np.ndarray:
    """Invert the angle map for one admissible angle vector.

    The target must lie strictly inside the angle polytope (each angle in
    (0, pi), vertex sums below pi); boundary targets are rejected since the
    corresponding tetrahedron degenerates.
    """
    a = validate_angles(a)
    x0 = np.ones(6) if initial is None else _as_lengths(np.asarray(initial, dtype=float))
    return _newton_lengths(a[None, :], x0[None, :].copy())[0]


@lru_cache(maxsize=None)
def _gl_rule(order: int):
    z, w = np.polynomial.legendre.leggauss(order)
    return z, w


def _segment_nodes_value(a0, d, s_lo, s_hi, x_lo, x_hi, order) -> float:
    z, w = _gl_rule(order)
    s = 0.5 * (s_lo + s_hi) + 0.5 * (s_hi - s_lo) * z
    A = a0[None, :] + s[:, None] * d[None, :]
    frac = (s - s_lo) / (s_hi - s_lo)
    X0 = x_lo[None, :] + frac[:, None] * (x_hi - x_lo)[None, :]
    X = _newton_lengths(A, X0)
    vals = -0.5 * (X @ d)
    return 0.5 * (s_hi - s_lo) * float(w @ vals), X


def _integrate_segment(a0, d, s_lo, s_hi, x_lo, x_hi, tol, depth=0) -> float:
    coarse, _ = _segment_nodes_value(a0, d, s_lo, s_hi, x_lo, x_hi, 12)
    fine, _ = _segment_nodes_value(a0, d, s_lo, s_hi, x_lo, x_hi, 24)
    if abs(fine - coarse) <= tol:
        return fine
    if depth >= 28:
        raise ConvergenceError(
            f"volume quadrature failed to converge (residual {abs(fine - coarse):.3e})")
    s_mid = 0.5 * (s_lo + s_hi)
    x_mid = _newton_lengths((a0 + s_mid * d)[None, :],
                            (0.5 * (x_lo + x_hi))[None, :])[0]
    return (_integrate_segment(a0, d, s_lo, s_mid, x_lo, x_mid, 0.5 * tol, depth + 1)
            + _integrate_segment(a0, d, s_mid, s_hi, x_mid, x_hi, 0.5 * tol, depth + 1))


def schlafli_segment(a_start, a_end, tol: float = QUADRATURE_TOL,
                     x_start=None, x_end=None) -> float:
    """Integrate -(1/2) sum_i x_i da_i along the straight angle segment.

    Both endpoints must lie strictly inside the angle polytope; the polytope
    is convex, so the whole segment does.  This is the exact differential of
    the volume, so concatenating segments is path independent.
    """
    a0 = validate_angles(a_start)
    a1 = validate_angles(a_end)
    d = a1 - a0
    if not np.any(d):
        return 0.0
    x0 = lengths_from_angles(a0) if x_start is None else np.asarray(x_start, dtype=float)
    x1 = lengths_from_angles(a1) if x_end is None else np.asarray(x_end, dtype=float)
    return _integrate_segment(a0, d, 0.0, 1.0, x0, x1, tol)


def schlafli_potential_of_angles(a, tol: float = QUADRATURE_TOL) -> float:
    """Volume relative to the regular unit-length shape, as a function of angles.

    Strictly concave on the angle polytope; its gradient is -x_i/2 where x
    realizes the angles.
    """
    return schlafli_segment(REF_ANGLES, a, tol=tol, x_start=REF_LENGTHS)


def schlafli_potential(x, tol: float = QUADRATURE_TOL) -> float:
    """Volume relative to the regular unit-length shape, as a function of lengths."""
    x = _as_lengths(np.asarray(x, dtype=float))
    return schlafli_segment(REF_ANGLES, angles_from_lengths(x), tol=tol,
                            x_start=REF_LENGTHS, x_end=x)


_MINK_METRIC = np.array([-1.0, 1.0, 1.0, 1.0])
_EIG_GUARD = 1e-12


def minkowski_oracle(x):
    """Recompute the dihedral angles from the Gram matrix, or None if inadmissible.

    Independent of the hexagon/triangle trigonometry: form the symmetric
    matrix G with unit diagonal and G_vw = -cosh x_vw, demand Lorentz
    signature (3, 1), embed the four vertex rays in Minkowski space, take
    space-like face normals and read angles off their inner products.  Used
    only for cross-validation.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (6,):
        raise ValueError("oracle takes a single length vector")
    _as_lengths(x)
    G = np.eye(4)
    for e, (v, w) in enumerate(EDGE_VERTEX_PAIRS):
        G[v, w] = G[w, v] = -math.cosh(x[e])
    lam, Q = np.linalg.eigh(G)
    scale = float(np.abs(lam).max())
    if not (lam[0] < -_EIG_GUARD * scale and lam[1] > _EIG_GUARD * scale):
        return None
    P = Q * np.sqrt(np.abs(lam))[None, :]
    normals = np.zeros((4, 4))
    for f in range(4):
        rows = P[[v for v in range(4) if v != f], :]
        _, sv, vh = np.linalg.svd(rows * _MINK_METRIC[None, :])
        n = vh[-1]
        nn = float(np.sum(_MINK_METRIC * n * n))
        if nn <= _EIG_GUARD:
            return None
        n = n / math.sqrt(nn)
        if float(np.sum(_MINK_METRIC * n * P[f])) > 0.0:
            n = -n
        normals[f] = n
    angles = np.zeros(6)
    for e, (v, w) in enumerate(EDGE_VERTEX_PAIRS):
        f1, f2 = [z for z in range(4) if z not in (v, w)]
        c = -float(np.sum(_MINK_METRIC * normals[f1] * normals[f2]))
        if not -1.0 < c < 1.0:
            return None
        angles[e] = math.acos(c)
    return angles


@dataclass(frozen=True)
class ConvexityProbe:
    """Result of sampling length-vector pairs for midpoint inadmissibility."""

    seed: int
    trials: int
    low: float
    high: float
    pairs_admissible: int
    witnesses: tuple

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed, "trials": self.trials,
            "low": self.low, "high": self.high,
            "pairs_admissible": self.pairs_admissible,
            "witness_count": len(self.witnesses),
            "witnesses": [[list(a), list(b)] for a, b in self.witnesses],
        }


def probe_length_space_convexity(trials: int, seed: int,
                                 low: float = 0.02, high: float = 8.0) -> ConvexityProbe:
    """Sample admissible pairs log-uniformly and test their midpoints.

    The admissible set is not convex, so with enough trials some midpoint
    fails; every failing pair is recorded verbatim as a witness.
    """
    if trials < 0:
        raise ValueError("trials must be non-negative")
    if not 0.0 < low < high:
        raise ValueError("need 0 < low < high")
    witnesses = []
    pairs = 0
    if trials > 0:
        rng = np.random.default_rng(seed)
        draws = np.exp(rng.uniform(math.log(low), math.log(high), size=(trials, 2, 6)))
        ok = _pipeline(draws).ok
        both = ok[:, 0] & ok[:, 1]
        pairs = int(both.sum())
        cand = draws[both]
        mid_ok = _pipeline(0.5 * (cand[:, 0] + cand[:, 1])).ok
        for a, b in cand[~mid_ok]:
            witnesses.append((tuple(float(v) for v in a), tuple(float(v) for v in b)))
    return ConvexityProbe(seed=seed, trials=trials, low=low, high=high,
                          pairs_admissible=pairs, witnesses=tuple(witnesses))


REF_LENGTHS = np.ones(6)
REF_LENGTHS.flags.writeable = False
REF_ANGLES = angles_from_lengths(REF_LENGTHS)
REF_ANGLES.flags.writeable = False
