"""Online tube synthesis.

The tube is a ball with center pulled toward the target by a signed
cube-root law (finite-time convergent) and pushed around obstacles by
barrier-scaled repulsion plus an orthogonal steering term, switched on
only when the avoidance probability drops to its activation threshold.
The radius follows a closed-form soft-min of the per-obstacle clearances
and the radius cap, so no radius ODE needs integrating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BarrierBreach, RadiusCollapse, StepCollapse
from .ncx2 import Ncx2Params, ncx2_quantile
from .world import ObstacleSnapshot, World, d_hat, q_center, snapshot

# Floor for the barrier denominator q - epsilon; protects the discrete
# integrator in the regime the continuous-time argument keeps infeasible.
_DENOM_FLOOR = 1e-9

# Projection shorter than this falls back to the deterministic orthonormal
# construction.
_PROJECTION_FLOOR = 1e-9

_MAX_HALVINGS = 8


@dataclass(frozen=True)
class SetSpec:
    """Interior anchor points and radii of the initial / target balls."""

    s: np.ndarray
    d_s: float
    eta: np.ndarray
    d_t: float

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float))
        if self.d_s <= 0.0 or self.d_t <= 0.0:
            raise ValueError("set radii d_s, d_t must be positive")
        if self.s.shape != self.eta.shape:
            raise ValueError("initial and target points must share a dimension")


@dataclass(frozen=True)
class TubeGains:
    """Center pull gain, soft-min sharpness and radius band."""

    k1: float
    nu: float
    r_min: float
    r_max: float

    def __post_init__(self):
        if self.k1 <= 0.0 or self.nu <= 0.0:
            raise ValueError("k1 and nu must be positive")
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError(
                f"need 0 < r_min < r_max, got r_min={self.r_min}, r_max={self.r_max}"
            )


@dataclass(frozen=True)
class TubeState:
    """Tube ball at one instant."""

    c: np.ndarray
    r: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.r <= 0.0:
            raise ValueError(f"tube radius must be positive, got {self.r}")


@dataclass(frozen=True)
class AvoidanceDiagnostics:
    """Per-obstacle internals of one center-field evaluation."""

    q: np.ndarray
    theta: np.ndarray
    d_hat: np.ndarray
    m_norm: np.ndarray


@dataclass
class SynthesisMemory:
    """Step-to-step carry-over: tangential sign persistence and quantile
    warm starts.  Owned by one run; never shared across scenarios."""

    tangents: dict[int, np.ndarray] = field(default_factory=dict)
    quantile_hints: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TubeEval:
    """Full evaluation of the synthesis laws at one (c, t)."""

    dc: np.ndarray
    diags: AvoidanceDiagnostics
    d_soft: float


def theta(q: float, p_d: float) -> float:
    """Switching weight: positive exactly when q has dropped to p_d."""
    if q <= 0.0:
        raise ValueError(f"avoidance probability must be positive, got {q}")
    if q <= p_d:
        return 1.0 / q - 1.0 / p_d
    return 0.0


def repulsion_vector(
    c: np.ndarray, snap: ObstacleSnapshot, q: float, epsilon: float, t: float = 0.0,
    obstacle: int = -1,
) -> np.ndarray:
    """Barrier-scaled push away from the obstacle mean: (c - mu)/(q - eps)."""
    if q <= epsilon:
        raise BarrierBreach(obstacle=obstacle, q=q, epsilon=epsilon, t=t)
    denom = max(q - epsilon, _DENOM_FLOOR)
    return (np.asarray(c, dtype=float) - snap.mu) / denom


def tangential_vector(
    m: np.ndarray, goal_dir: np.ndarray, prev: np.ndarray | None = None
) -> np.ndarray:
    """Unit vector orthogonal to m, steering as goal-aligned as possible.

    Uses the normalized projection of goal_dir onto the orthogonal
    complement of m; degenerate projections fall back to a deterministic
    orthonormal construction whose sign follows the previous step's vector
    to avoid chattering.  A zero m returns the normalized goal direction.
    """
    m = np.asarray(m, dtype=float)
    goal_dir = np.asarray(goal_dir, dtype=float)
    m_sq = float(np.dot(m, m))
    if m_sq == 0.0:
        g = float(np.linalg.norm(goal_dir))
        return goal_dir / g if g > 0.0 else np.zeros_like(goal_dir)

    proj = goal_dir - (float(np.dot(goal_dir, m)) / m_sq) * m
    norm = float(np.linalg.norm(proj))
    if norm >= _PROJECTION_FLOOR:
        return proj / norm

    n = len(m)
    if n in (2, 3):
        # swap-and-negate the two largest-magnitude components; the largest
        # is nonzero, so v never degenerates
        order = np.argsort(np.abs(m))
        i, j = int(order[-1]), int(order[-2])
        v = np.zeros_like(m)
        v[i] = -m[j]
        v[j] = m[i]
    else:
        # Gram-Schmidt against the canonical axis least aligned with m
        k = int(np.argmin(np.abs(m)))
        v = -(m[k] / m_sq) * m
        v[k] += 1.0
    v = v / float(np.linalg.norm(v))
    if prev is not None and float(np.dot(v, prev)) < 0.0:
        v = -v
    return v


def signed_cbrt(x: np.ndarray) -> np.ndarray:
    """Element-wise sign(x)*|x|^(1/3); the only reading of a fractional
    power of a vector that keeps each component finite-time convergent."""
    return np.cbrt(np.asarray(x, dtype=float))


def _field_terms(c, t, world: World, sets: SetSpec, gains: TubeGains, memory):
    """Derivative of the center plus the per-obstacle quantities that are
    free by-products (q, theta, |m|, chosen tangents).  No clearance
    quantiles; see evaluate() for the full evaluation."""
    c = np.asarray(c, dtype=float)
    dc = gains.k1 * signed_cbrt(sets.eta - c)
    n_o = len(world.obstacles)
    qs = np.empty(n_o)
    thetas = np.zeros(n_o)
    m_norms = np.zeros(n_o)
    tangents: dict[int, np.ndarray] = {}
    for j, obs in enumerate(world.obstacles):
        snap = snapshot(obs, t)
        q = q_center(c, snap, gains.r_min)
        qs[j] = q
        if q <= obs.epsilon:
            raise BarrierBreach(obstacle=j, q=q, epsilon=obs.epsilon, t=t)
        th = theta(q, obs.p_d)
        if th > 0.0:
            m = repulsion_vector(c, snap, q, obs.epsilon, t=t, obstacle=j)
            prev = memory.tangents.get(j) if memory is not None else None
            v = tangential_vector(m, sets.eta - c, prev=prev)
            dc = dc + (obs.k2 * m + obs.k3 * v) * th
            thetas[j] = th
            m_norms[j] = float(np.linalg.norm(m))
            tangents[j] = v
    return dc, qs, thetas, m_norms, tangents


def center_derivative(
    c, t, world: World, sets: SetSpec, gains: TubeGains,
    memory: SynthesisMemory | None = None,
) -> tuple[np.ndarray, AvoidanceDiagnostics]:
    """Time derivative of the tube center with full diagnostics."""
    ev = evaluate(c, t, world, sets, gains, memory)
    return ev.dc, ev.diags


@lru_cache(maxsize=256)
def _central_clearance_root(n: int, epsilon: float) -> float:
    # sqrt of the central chi-squared epsilon-quantile; constant per task
    return math.sqrt(ncx2_quantile(epsilon, Ncx2Params(n, 0.0)))


def _clearances(c, t, world: World, gains: TubeGains, memory) -> np.ndarray:
    """Per-obstacle clearances feeding the soft-min.

    For obstacles so distant that they cannot perturb the soft-min in
    double precision (clearance beyond r_max + 46/nu), the exact quantile
    is skipped in favor of a rigorous triangle-inequality lower bound
    |c - mu| - sigma * sqrt(central quantile) - r_o; the resulting radius
    is bit-identical to the exact evaluation."""
    out = np.empty(len(world.obstacles))
    c = np.asarray(c, dtype=float)
    far_cutoff = gains.r_max + 46.0 / gains.nu
    for j, obs in enumerate(world.obstacles):
        snap = snapshot(obs, t)
        lower = (
            float(np.linalg.norm(c - snap.mu))
            - snap.sigma * _central_clearance_root(len(snap.mu), obs.epsilon)
            - snap.r_o
        )
        if lower >= far_cutoff:
            out[j] = lower
            continue
        hint = memory.quantile_hints.get(j) if memory is not None else None
        out[j] = d_hat(c, snap, obs.epsilon, quantile_hint=hint)
        if memory is not None:
            memory.quantile_hints[j] = ((out[j] + snap.r_o) / snap.sigma) ** 2
    return out


def soft_min_distance(c, t, world: World, gains: TubeGains,
                      memory: SynthesisMemory | None = None) -> float:
    """Log-sum-exp soft minimum of the per-obstacle clearances.

    Always underestimates the true minimum (every omitted exponential term
    is positive), which is the direction the radius bound needs.  With no
    obstacles there is nothing to clear: +inf, letting the radius saturate.
    """
    if not world.obstacles:
        return math.inf
    dh = _clearances(c, t, world, gains, memory)
    return _soft_min(dh, gains.nu)


def _soft_min(values: np.ndarray, nu: float) -> float:
    m = float(np.min(values))
    return m - math.log(float(np.sum(np.exp(-nu * (values - m))))) / nu


def radius(c, t, world: World, gains: TubeGains,
           memory: SynthesisMemory | None = None) -> float:
    """Closed-form tube radius: soft-min of the clearance aggregate and
    the radius cap."""
    d = soft_min_distance(c, t, world, gains, memory)
    return _radius_from_clearance(d, gains, t)


def _radius_from_clearance(d: float, gains: TubeGains, t: float) -> float:
    if math.isinf(d):
        return gains.r_max
    nu = gains.nu
    m = min(gains.r_max, d)
    r = m - math.log(math.exp(-nu * (gains.r_max - m)) + math.exp(-nu * (d - m))) / nu
    if r <= 0.0:
        raise RadiusCollapse(r=r, t=t)
    return r


def evaluate(c, t, world: World, sets: SetSpec, gains: TubeGains,
             memory: SynthesisMemory | None = None) -> TubeEval:
    """Full evaluation at (c, t): center derivative, diagnostics and the
    soft-min clearance.  Updates the memory (tangent signs, quantile warm
    starts); the light RK stage evaluations only read it."""
    dc, qs, thetas, m_norms, tangents = _field_terms(c, t, world, sets, gains, memory)
    if world.obstacles:
        dh = _clearances(c, t, world, gains, memory)
        d_soft = _soft_min(dh, gains.nu)
    else:
        dh = np.empty(0)
        d_soft = math.inf
    if memory is not None:
        memory.tangents.update(tangents)
    return TubeEval(
        dc=dc,
        diags=AvoidanceDiagnostics(q=qs, theta=thetas, d_hat=dh, m_norm=m_norms),
        d_soft=d_soft,
    )


def analytic_center_obstacle_free(c1, t1: float, eta, k1: float, t: float):
    """Closed-form center trajectory with every obstacle term inactive.

    Component-wise signed solution of dc/dt = k1 * cbrt(eta - c); each
    component clamps at the target once its arrival time has passed (the
    derivative is zero there)."""
    c1 = np.asarray(c1, dtype=float)
    eta = np.asarray(eta, dtype=float)
    delta = eta - c1
    base = np.abs(delta) ** (2.0 / 3.0) - (2.0 / 3.0) * k1 * (t - t1)
    out = eta - np.sign(delta) * np.where(base > 0.0, base, 0.0) ** 1.5
    return out


def convergence_time(c_t1, eta, k1: float, t1: float) -> float:
    """Time at which the slowest component of the obstacle-free center
    reaches the target point."""
    if k1 <= 0.0:
        raise ValueError("k1 must be positive")
    delta = np.abs(np.asarray(eta, dtype=float) - np.asarray(c_t1, dtype=float))
    if delta.size == 0 or float(np.max(delta)) == 0.0:
        return t1
    return t1 + 3.0 * float(np.max(delta ** (2.0 / 3.0))) / (2.0 * k1)


def _rk4(c, t, h, world, sets, gains, memory, k1v=None):
    """One RK4 step of the center field; returns the new center."""

    def f(ci, ti):
        dc, _, _, _, _ = _field_terms(ci, ti, world, sets, gains, memory)
        return dc

    if k1v is None:
        k1v = f(c, t)
    k2v = f(c + 0.5 * h * k1v, t + 0.5 * h)
    k3v = f(c + 0.5 * h * k2v, t + 0.5 * h)
    k4v = f(c + h * k3v, t + h)
    return c + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)


def _q_margins(c, t, world, gains):
    qs = np.empty(len(world.obstacles))
    for j, obs in enumerate(world.obstacles):
        q = q_center(c, snapshot(obs, t), gains.r_min)
        if q <= obs.epsilon:
            raise BarrierBreach(obstacle=j, q=q, epsilon=obs.epsilon, t=t)
        qs[j] = q
    return qs


def _advance(c, t, h, depth, q_start, world, sets, gains, memory, k1v=None):
    """Advance the center by h, halving recursively when the step eats too
    much of some barrier margin."""
    try:
        c_new = _rk4(c, t, h, world, sets, gains, memory, k1v=k1v)
        q_new = _q_margins(c_new, t + h, world, gains)
    except BarrierBreach:
        if depth >= _MAX_HALVINGS:
            raise
        c_mid, q_mid = _advance(
            c, t, 0.5 * h, depth + 1, q_start, world, sets, gains, memory, k1v=k1v
        )
        return _advance(c_mid, t + 0.5 * h, 0.5 * h, depth + 1, q_mid, world, sets, gains, memory)

    if world.obstacles:
        eps = np.array([o.epsilon for o in world.obstacles])
        drops = q_start - q_new
        if np.any(q_new - eps < 10.0 * drops):
            if depth >= _MAX_HALVINGS:
                raise StepCollapse(t=t, halvings=depth)
            c_mid, q_mid = _advance(
                c, t, 0.5 * h, depth + 1, q_start, world, sets, gains, memory, k1v=k1v
            )
            return _advance(c_mid, t + 0.5 * h, 0.5 * h, depth + 1, q_mid, world, sets, gains, memory)
    return c_new, q_new


def tube_step(
    state: TubeState,
    dt: float,
    world: World,
    sets: SetSpec,
    gains: TubeGains,
    memory: SynthesisMemory | None = None,
    start_eval: TubeEval | None = None,
) -> tuple[TubeState, TubeEval]:
    """Advance the tube by one step: RK4 on the center (with adaptive
    sub-stepping near barriers), then the closed-form radius at the new
    time.  Returns the new state plus its full evaluation, which doubles
    as the next logged record's diagnostics."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    c, t = state.c, state.t
    if start_eval is not None:
        q_start = start_eval.diags.q
        k1v = start_eval.dc
    else:
        q_start = _q_margins(c, t, world, gains)
        k1v = None
    c_new, _ = _advance(c, t, dt, 0, q_start, world, sets, gains, memory, k1v=k1v)
    t_new = t + dt
    ev = evaluate(c_new, t_new, world, sets, gains, memory)
    r_new = _radius_from_clearance(ev.d_soft, gains, t_new)
    return TubeState(c=c_new, r=r_new, t=t_new), ev
