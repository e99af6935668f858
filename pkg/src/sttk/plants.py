"""Simulated pure-feedback plants and bounded disturbance realizations.

These stand in for the "unknown" systems the controller drives: the
controller never inspects the drift or gain terms below (and imports
nothing from here).  All instances satisfy the structural assumptions the
control law needs: locally Lipschitz dynamics and uniformly positive
definite symmetric input-gain parts with floor 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowup

KINDS = ("single_integrator", "double_integrator", "nonlinear_demo")

_STAGES_BY_KIND = {"single_integrator": 1, "double_integrator": 2, "nonlinear_demo": 2}


@dataclass(frozen=True)
class PlantSpec:
    """Plant family, dimensions and disturbance configuration."""

    kind: str
    dim: int
    stages: int
    disturbance_bound: tuple[float, ...]
    initial_state: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plant kind {self.kind!r}; pick one of {KINDS}")
        if self.stages != _STAGES_BY_KIND[self.kind]:
            raise ValueError(
                f"{self.kind} has {_STAGES_BY_KIND[self.kind]} stages, got {self.stages}"
            )
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "disturbance_bound", tuple(float(b) for b in self.disturbance_bound))
        if len(self.disturbance_bound) != self.stages:
            raise ValueError("need one disturbance bound per stage")
        if any(b < 0.0 for b in self.disturbance_bound):
            raise ValueError("disturbance bounds must be non-negative")
        object.__setattr__(
            self, "initial_state", np.asarray(self.initial_state, dtype=float)
        )
        if self.initial_state.size != self.dim * self.stages:
            raise ValueError(
                f"initial state needs {self.dim * self.stages} entries, "
                f"got {self.initial_state.size}"
            )


class DisturbanceGen:
    """Smooth bounded noise: a seeded random Fourier sum per (stage,
    component) with a low-pass (correlation-time-limited) frequency draw.

    The signal is an exact function of (seed, stage, t), so the plant can
    sample it at arbitrary integrator stage times and reruns reproduce it
    bit for bit.  The amplitude weights are L1-normalized, which makes the
    sup-norm bound hold pathwise, not just in expectation.
    """

    N_MODES = 8

    def __init__(self, seed: int, bounds, dim: int, correlation_time: float = 1.0):
        self.seed = int(seed)
        self.bounds = tuple(float(b) for b in bounds)
        self.dim = int(dim)
        self.correlation_time = float(correlation_time)
        if self.correlation_time <= 0.0:
            raise ValueError("correlation_time must be positive")
        self._omega = []
        self._phase = []
        self._weight = []
        for stage in range(len(self.bounds)):
            rng = np.random.default_rng([self.seed, stage, 0x5772])
            u = rng.uniform(-0.5, 0.5, size=(self.dim, self.N_MODES))
            # Lorentzian frequency draw (the spectrum of an exponentially
            # correlated process), clipped against extreme tails
            omega = np.tan(math.pi * u) / self.correlation_time
            np.clip(omega, -20.0 / self.correlation_time, 20.0 / self.correlation_time, out=omega)
            phase = rng.uniform(0.0, 2.0 * math.pi, size=(self.dim, self.N_MODES))
            raw = rng.uniform(0.2, 1.0, size=(self.dim, self.N_MODES))
            weight = raw / raw.sum(axis=1, keepdims=True)
            self._omega.append(omega)
            self._phase.append(phase)
            self._weight.append(weight)

    def sample(self, stage: int, t: float) -> np.ndarray:
        bound = self.bounds[stage]
        if bound == 0.0:
            return np.zeros(self.dim)
        s = np.sin(self._omega[stage] * t + self._phase[stage])
        return bound * np.einsum("ik,ik->i", self._weight[stage], s)


def disturbance(gen: DisturbanceGen, stage: int, t: float) -> np.ndarray:
    return gen.sample(stage, t)


def _nonlinear_gain_matrices(xbar: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Input-gain matrices of the nonlinear demo plant (for the
    sign-definiteness sweep; the controller never calls this)."""
    x1 = xbar[:n]
    g1 = (1.5 + 0.5 * math.tanh(float(np.linalg.norm(x1)))) * np.eye(n)
    g2 = np.diag(2.0 + np.cos(x1))
    return g1, g2


def plant_derivative(
    spec: PlantSpec, xbar: np.ndarray, u: np.ndarray, w, t: float
) -> np.ndarray:
    """Stacked state derivative for the selected plant family.

    w is the per-stage disturbance, shape (stages, dim)."""
    n = spec.dim
    xbar = np.asarray(xbar, dtype=float)
    u = np.asarray(u, dtype=float)
    if xbar.size != n * spec.stages or u.size != n:
        raise ValueError("state/input dimensions inconsistent with the plant spec")
    w = np.asarray(w, dtype=float).reshape(spec.stages, n)

    if spec.kind == "single_integrator":
        return u + w[0]

    x1 = xbar[:n]
    x2 = xbar[n:]
    if spec.kind == "double_integrator":
        return np.concatenate([x2 + w[0], u + w[1]])

    # nonlinear_demo
    g1 = 1.5 + 0.5 * math.tanh(float(np.linalg.norm(x1)))
    dx1 = 0.1 * np.sin(x1) + g1 * x2 + w[0]
    coupling = 0.1 * x1 * x2 / (1.0 + float(np.linalg.norm(xbar)))
    dx2 = coupling + (2.0 + np.cos(x1)) * u + w[1]
    return np.concatenate([dx1, dx2])


def plant_step(
    spec: PlantSpec,
    xbar: np.ndarray,
    u: np.ndarray,
    gen: DisturbanceGen | None,
    t: float,
    dt: float,
) -> np.ndarray:
    """One RK4 step with the input held constant and the disturbance
    sampled at the integrator stage times."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    def w_at(ti):
        if gen is None:
            return np.zeros((spec.stages, spec.dim))
        return np.stack([gen.sample(s, ti) for s in range(spec.stages)])

    xbar = np.asarray(xbar, dtype=float)
    w0 = w_at(t)
    w_half = w_at(t + 0.5 * dt)
    w1 = w_at(t + dt)
    k1 = plant_derivative(spec, xbar, u, w0, t)
    k2 = plant_derivative(spec, xbar + 0.5 * dt * k1, u, w_half, t + 0.5 * dt)
    k3 = plant_derivative(spec, xbar + 0.5 * dt * k2, u, w_half, t + 0.5 * dt)
    k4 = plant_derivative(spec, xbar + dt * k3, u, w1, t + dt)
    out = xbar + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup(t=t)
    return out
