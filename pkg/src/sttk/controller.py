"""Closed-form cascade controller confining the output to the tube.

Stage 1 turns the normalized radial error inside the tube into a
log-barrier reference for the next state block; every later stage tracks
its reference inside an exponentially shrinking per-component funnel.
The laws use only measured state, the tube, and gains; no plant model
enters anywhere (and this module deliberately imports nothing from the
plant side).
"""

from __future__ import annotations

import numpy as np

from .errors import FunnelViolation, TubeViolation
from .tube import TubeState

# Normalized errors at or beyond 1 - EDGE invalidate the control law's
# domain; that is a hard failure, not something to saturate away.
_EDGE = 1e-12


class FunnelStageParams:
    """Per-stage funnel shape: kappa gain, initial bound p, asymptotic
    bound q and decay rate mu, all per component."""

    def __init__(self, kappa, p, q, mu):
        self.kappa = float(kappa)
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.mu = np.asarray(mu, dtype=float)
        if self.kappa <= 0.0:
            raise ValueError("stage gain kappa must be positive")
        if not (self.p.shape == self.q.shape == self.mu.shape):
            raise ValueError("funnel parameter arrays must share a shape")
        if np.any(self.q <= 0.0) or np.any(self.p <= self.q):
            raise ValueError("funnel bounds need p > q > 0 per component")
        if np.any(self.mu < 0.0):
            raise ValueError("funnel decay rates must be non-negative")


class ControllerConfig:
    """Stage-1 gain plus funnel parameters for stages 2..N."""

    def __init__(self, kappa1, stages=()):
        self.kappa1 = float(kappa1)
        self.stages = tuple(stages)
        if self.kappa1 <= 0.0:
            raise ValueError("kappa1 must be positive")


def stage1_reference(x1: np.ndarray, tube: TubeState, kappa1: float) -> np.ndarray:
    """Log-barrier radial law: grows unboundedly as the output nears the
    tube boundary, vanishes at the center."""
    x1 = np.asarray(x1, dtype=float)
    err = x1 - tube.c
    e1 = float(np.linalg.norm(err)) / tube.r
    if e1 >= 1.0 - _EDGE:
        raise TubeViolation(e1=e1, t=tube.t)
    rho1 = np.log((1.0 + e1) / (1.0 - e1))
    return -kappa1 * rho1 * err


def funnel_gamma(params: FunnelStageParams, i: int, t: float) -> float:
    """Funnel width of component i at time t."""
    return float((params.p[i] - params.q[i]) * np.exp(-params.mu[i] * t) + params.q[i])


def _gamma_vector(params: FunnelStageParams, t: float) -> np.ndarray:
    return (params.p - params.q) * np.exp(-params.mu * t) + params.q


def stage_k_reference(
    xk: np.ndarray,
    rk: np.ndarray,
    params: FunnelStageParams,
    t: float,
    stage: int = 0,
) -> np.ndarray:
    """Funnel tracking law for one cascade stage (element-wise)."""
    xk = np.asarray(xk, dtype=float)
    rk = np.asarray(rk, dtype=float)
    gamma = _gamma_vector(params, t)
    e = (xk - rk) / gamma
    worst = int(np.argmax(np.abs(e)))
    if abs(e[worst]) >= 1.0 - _EDGE:
        raise FunnelViolation(stage=stage, component=worst, e=float(e[worst]), t=t)
    rho = np.log((1.0 + e) / (1.0 - e))
    xi = 4.0 / (gamma * (1.0 - e * e))
    return -params.kappa * xi * rho


def control_input(
    xbar: np.ndarray, tube: TubeState, config: ControllerConfig, t: float
) -> np.ndarray:
    """Cascade the stage laws through the stacked state; the final
    reference is the actual input."""
    xbar = np.asarray(xbar, dtype=float)
    n = len(tube.c)
    if xbar.size % n != 0:
        raise ValueError(f"stacked state of size {xbar.size} is not a multiple of n={n}")
    n_stages = xbar.size // n
    if len(config.stages) != n_stages - 1:
        raise ValueError(
            f"{n_stages}-stage plant needs {n_stages - 1} funnel stages, "
            f"got {len(config.stages)}"
        )
    ref = stage1_reference(xbar[:n], tube, config.kappa1)
    for k in range(2, n_stages + 1):
        xk = xbar[(k - 1) * n : k * n]
        ref = stage_k_reference(xk, ref, config.stages[k - 2], t, stage=k)
    return ref


def stage_references(
    xbar: np.ndarray, tube: TubeState, config: ControllerConfig, t: float
) -> list[np.ndarray]:
    """References r_2..r_{N+1} along the cascade; r_{N+1} is the input.

    Used by the initialization check and the post-hoc funnel audit."""
    xbar = np.asarray(xbar, dtype=float)
    n = len(tube.c)
    refs = [stage1_reference(xbar[:n], tube, config.kappa1)]
    for k in range(2, xbar.size // n + 1):
        xk = xbar[(k - 1) * n : k * n]
        refs.append(stage_k_reference(xk, refs[-1], config.stages[k - 2], t, stage=k))
    return refs


def check_initialization(
    xbar0: np.ndarray, tube0: TubeState, config: ControllerConfig
) -> list[str]:
    """Initial-error conditions: |x_k(0) - r_k(0)| <= p_k per component
    (equivalently, normalized errors start at magnitude <= 1)."""
    violations = []
    xbar0 = np.asarray(xbar0, dtype=float)
    n = len(tube0.c)
    if float(np.linalg.norm(xbar0[:n] - tube0.c)) >= tube0.r:
        violations.append("initial containment: output starts outside the tube")
        return violations
    refs = [stage1_reference(xbar0[:n], tube0, config.kappa1)]
    for k in range(2, xbar0.size // n + 1):
        params = config.stages[k - 2]
        xk = xbar0[(k - 1) * n : k * n]
        err = np.abs(xk - refs[-1])
        for i in np.flatnonzero(err > params.p):
            violations.append(
                f"stage {k} component {i}: initial error {err[i]:.6g} exceeds "
                f"funnel start {params.p[i]:.6g}"
            )
        if np.any(err > params.p):
            break  # the cascade past a broken stage is meaningless
        refs.append(stage_k_reference(xk, refs[-1], params, 0.0, stage=k))
    return violations


def make_default_stages(
    xbar0: np.ndarray, tube0: TubeState, kappa1: float, stage_kappas
) -> tuple[FunnelStageParams, ...]:
    """Funnel parameters guaranteeing the initialization condition with
    margin: p = 2|x_k(0) - r_k(0)| + 0.5, q = 0.1, mu = 1.0."""
    xbar0 = np.asarray(xbar0, dtype=float)
    n = len(tube0.c)
    n_stages = xbar0.size // n
    ref = stage1_reference(xbar0[:n], tube0, kappa1)
    stages = []
    for k in range(2, n_stages + 1):
        xk = xbar0[(k - 1) * n : k * n]
        p = 2.0 * np.abs(xk - ref) + 0.5
        params = FunnelStageParams(
            kappa=stage_kappas[k - 2],
            p=p,
            q=np.full(n, 0.1),
            mu=np.full(n, 1.0),
        )
        stages.append(params)
        ref = stage_k_reference(xk, ref, params, 0.0, stage=k)
    return tuple(stages)
