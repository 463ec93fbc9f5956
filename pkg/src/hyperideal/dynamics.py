"""Curvature flow, energy minimization, and stability experiments.

The flow integrates dx/dt = K(x) on the space of admissible cone metrics.
Every right-hand-side evaluation revalidates admissibility first; a stage
or step that leaves the admissible set is rejected and retried with half
the step, never silently clamped.  A run ends in exactly one of three
states: ``converged`` (curvature below tolerance), ``degenerated`` (some
tetrahedron's admissibility margin fell below the configured floor, with a
witness corner), or ``t_max_reached``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metric as metric_mod
from . import tetgeom
from .errors import ConvergenceError, DefinitenessError
from .metric import ConeMetric

RECOVERY_TOL = 1e-6  # distance to the equilibrium that counts as recovered

# Fehlberg 4(5) tableau
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)

_METHODS = ("rkf45_adaptive", "rk4_fixed")


@dataclass(frozen=True)
class FlowConfig:
    t_max: float = 50.0
    initial_step: float = 0.01
    curvature_tol: float = 1e-12
    degeneration_margin: float = 1e-7
    method: str = "rkf45_adaptive"
    rtol: float = 1e-12
    atol: float = 1e-14
    seed: int = 0
    max_steps: int = 200000

    def validate(self) -> None:
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite")
        if not (self.initial_step > 0):
            raise ValueError("initial_step must be positive")
        if self.curvature_tol < 1e-13:
            raise ValueError("curvature_tol below 1e-13 is not resolvable")
        if not (self.degeneration_margin > 0):
            raise ValueError("degeneration_margin must be positive")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class FlowTrace:
    """Sampled trajectory: row k is the state after the k-th accepted step."""

    t: np.ndarray
    x: np.ndarray
    K: np.ndarray
    total_curv: np.ndarray  # sum of squared curvatures
    H: np.ndarray
    status: str
    witness: Optional[dict]
    steps_accepted: int
    steps_rejected: int
    config: FlowConfig


class _Rhs:
    """Curvature evaluation bound to one triangulation, with admissibility gate."""

    def __init__(self, tri):
        self.tri = tri
        self.cm = metric_mod.class_matrix(tri)
        self.n = tri.n_edges
        self.two_pi = 2.0 * math.pi

    def tet_lengths(self, x):
        return x[self.cm]

    def try_angles(self, x):
        """Per-tet angle matrix, or None when x leaves the admissible set."""
        if not ((x > 0.0).all() and (x <= tetgeom.MAX_LENGTH).all()
                and np.isfinite(x).all()):
            return None
        X = self.tet_lengths(x)
        pl = tetgeom._pipeline(X)
        if not pl.ok.all():
            return None
        return pl.angles

    def curvature_of_angles(self, A):
        S = np.zeros(self.n)
        np.add.at(S, self.cm.ravel(), A.ravel())
        return self.two_pi - S

    def try_k(self, x):
        A = self.try_angles(x)
        return None if A is None else self.curvature_of_angles(A)


def _tet_potential_increment(A0, A1, X0, X1) -> float:
    total = 0.0
    for t in range(A0.shape[0]):
        total += tetgeom.schlafli_segment(A0[t], A1[t], x_start=X0[t], x_end=X1[t])
    return total


def flow(m0: ConeMetric, cfg: FlowConfig = FlowConfig()) -> FlowTrace:
    """Integrate dx/dt = K from m0 until convergence, degeneration or t_max.

    The energy column is accumulated per step from the exact volume
    differential, after one direct evaluation at the start.
    """
    cfg.validate()
    rhs = _Rhs(m0.tri)
    x = np.array(m0.x, dtype=float)

    # initial state, with located errors if m0 is bad
    metric_mod.curvature(m0)
    A = rhs.try_angles(x)
    K = rhs.curvature_of_angles(A)
    V = float(metric_mod.tet_potentials(m0).sum())
    H = 2.0 * V - float(K @ x)
    margin, witness = metric_mod.metric_margin(m0)

    ts, xs, ks, hs = [0.0], [x.copy()], [K.copy()], [H]
    status, final_witness = None, None
    if margin < cfg.degeneration_margin:
        status, final_witness = "degenerated", witness
    elif float(np.abs(K).max()) < cfg.curvature_tol:
        status = "converged"

    t = 0.0
    h = cfg.initial_step
    accepted = rejected = 0
    adaptive = cfg.method == "rkf45_adaptive"

    while status is None:
        if t >= cfg.t_max * (1.0 - 1e-14):
            status = "t_max_reached"
            break
        if accepted + rejected >= cfg.max_steps:
            raise ConvergenceError(
                f"flow exceeded {cfg.max_steps} steps (t = {t!r})", last=x)
        h = min(h, cfg.t_max - t)
        if h < 1e-14 * max(1.0, t):
            raise ConvergenceError(
                f"flow step size underflowed at t = {t!r}", last=x)

        stages = [K]
        valid = True
        for i in range(1, 6 if adaptive else 4):
            if adaptive:
                coeff = _RKF_A[i]
            else:
                coeff = ((0.5,), (0.0, 0.5), (0.0, 0.0, 1.0))[i - 1]
            xi = x + h * sum(c * k for c, k in zip(coeff, stages))
            ki = rhs.try_k(xi)
            if ki is None:
                valid = False
                break
            stages.append(ki)

        x_new = K_new = A_new = None
        err_ratio = 0.0
        if valid:
            if adaptive:
                x_new = x + h * sum(b * k for b, k in zip(_RKF_B5, stages))
                err = h * sum((b5 - b4) * k
                              for b5, b4, k in zip(_RKF_B5, _RKF_B4, stages))
                scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x_new))
                err_ratio = float(np.abs(err / scale).max())
                if err_ratio > 1.0:
                    valid = False
            else:
                x_new = x + (h / 6.0) * (stages[0] + 2 * stages[1]
                                         + 2 * stages[2] + stages[3])
        if valid:
            A_new = rhs.try_angles(x_new)
            if A_new is None:
                valid = False

        if not valid:
            rejected += 1
            if adaptive and err_ratio > 1.0:
                h *= max(0.2, 0.9 * err_ratio ** -0.2)
            else:
                h *= 0.5
            continue

        K_new = rhs.curvature_of_angles(A_new)
        V += _tet_potential_increment(A, A_new, rhs.tet_lengths(x),
                                      rhs.tet_lengths(x_new))
        t += h
        x, K, A = x_new, K_new, A_new
        H = 2.0 * V - float(K @ x)
        accepted += 1
        ts.append(t)
        xs.append(x.copy())
        ks.append(K.copy())
        hs.append(H)

        margin, witness = metric_mod.metric_margin(m0.with_lengths(x))
        if margin < cfg.degeneration_margin:
            status, final_witness = "degenerated", witness
        elif float(np.abs(K).max()) < cfg.curvature_tol:
            status = "converged"
        elif adaptive:
            grow = 5.0 if err_ratio == 0.0 else min(5.0, max(0.2, 0.9 * err_ratio ** -0.2))
            h *= grow

    Kmat = np.array(ks)
    return FlowTrace(t=np.array(ts), x=np.array(xs), K=Kmat,
                     total_curv=(Kmat ** 2).sum(axis=1), H=np.array(hs),
                     status=status, witness=final_witness,
                     steps_accepted=accepted, steps_rejected=rejected,
                     config=cfg)


@dataclass(frozen=True)
class MinimizeReport:
    iterations: int
    K_norm: float
    H_val: float
    step_sizes: tuple


def minimize_energy(m0: ConeMetric, tol: float = 1e-12,
                    max_iter: int = 100) -> tuple:
    """Newton descent on the energy H; returns (metric, report).

    Each step solves (-J) d = K; the Cholesky factorization of -J doubles as
    a positive-definiteness certificate, and its failure is raised as a
    DefinitenessError rather than worked around.  The backtracking line
    search rejects iterates that leave the admissible set.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rhs = _Rhs(m0.tri)
    x = np.array(m0.x, dtype=float)
    metric_mod.curvature(m0)

    def h_of(xv):
        mm = m0.with_lengths(xv)
        return 2.0 * float(metric_mod.tet_potentials(mm).sum()) \
            - float(rhs.try_k(xv) @ xv)

    steps = []
    K = rhs.try_k(x)
    for it in range(max_iter):
        if float(np.abs(K).max()) < tol:
            return m0.with_lengths(x), MinimizeReport(
                iterations=it, K_norm=float(np.abs(K).max()),
                H_val=h_of(x), step_sizes=tuple(steps))
        J = metric_mod.curvature_jacobian(m0.with_lengths(x))
        A = -J
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise DefinitenessError(
                f"curvature Jacobian lost negative definiteness at x = {x!r}: {exc}")
        d = np.linalg.solve(A, K)
        H0 = h_of(x)
        slope = -float(K @ d)  # gradient of H is -K
        # Once the predicted decrease drops below the float resolution of H
        # the sufficient-decrease test compares pure rounding noise; from
        # there only admissibility gates the (locally quadratic) Newton step.
        noise = 64.0 * np.finfo(float).eps * max(1.0, abs(H0))
        alpha = 1.0
        for _ in range(60):
            xc = x + alpha * d
            if (xc > 0.0).all() and rhs.try_k(xc) is not None:
                if -slope <= noise or h_of(xc) <= H0 + 1e-4 * alpha * slope:
                    break
            alpha *= 0.5
        else:
            raise ConvergenceError(
                "energy line search failed: the Newton direction leaves the "
                "admissible set", last=x)
        x = x + alpha * d
        steps.append(alpha)
        K = rhs.try_k(x)
    raise ConvergenceError(
        f"energy minimization did not reach {tol} in {max_iter} iterations",
        last=x)


@dataclass(frozen=True)
class AttractorReport:
    radius: float
    trials: int
    seed: int
    recovered: int
    fraction: float
    max_distance: float
    distances: tuple
    statuses: tuple


def attractor_experiment(m_eq: ConeMetric, radius: float, trials: int,
                         seed: int, cfg: FlowConfig = FlowConfig()) -> AttractorReport:
    """Flow from random perturbations of an equilibrium and report recovery.

    m_eq must satisfy |K| < 1e-10; perturbations are uniform in the infinity
    ball of the given radius, which must keep all lengths positive.
    """
    state = metric_mod.curvature(m_eq)
    if float(np.abs(state.K).max()) >= 1e-10:
        raise ValueError("attractor experiment needs an equilibrium metric")
    if trials < 0:
        raise ValueError("trials must be non-negative")
    if not (0 <= radius < float(m_eq.x.min())):
        raise ValueError("radius must be non-negative and below the smallest length")
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(-radius, radius, size=(trials, m_eq.x.size))
    distances, statuses = [], []
    recovered = 0
    for i in range(trials):
        trace = flow(m_eq.with_lengths(m_eq.x + deltas[i]), cfg)
        dist = float(np.abs(trace.x[-1] - m_eq.x).max())
        distances.append(dist)
        statuses.append(trace.status)
        if trace.status == "converged" and dist <= RECOVERY_TOL:
            recovered += 1
    return AttractorReport(
        radius=radius, trials=trials, seed=seed, recovered=recovered,
        fraction=(recovered / trials) if trials else 1.0,
        max_distance=max(distances) if distances else 0.0,
        distances=tuple(distances), statuses=tuple(statuses))


@dataclass(frozen=True)
class RigidityReport:
    singular_values: tuple
    sigma_min: float
    sigma_max: float
    nonsingular: bool


def rigidity_probe(m: ConeMetric) -> RigidityReport:
    """Singular values of dK/dx; a nonsingular Jacobian means the curvature
    map is a local diffeomorphism, i.e. the metric is locally rigid."""
    J = metric_mod.curvature_jacobian(m)
    sv = np.linalg.svd(J, compute_uv=False)
    smin, smax = float(sv[-1]), float(sv[0])
    return RigidityReport(singular_values=tuple(float(s) for s in sv),
                          sigma_min=smin, sigma_max=smax,
                          nonsingular=smin > 1e-12 * max(1.0, smax))
