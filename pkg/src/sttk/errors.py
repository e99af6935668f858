"""Failure modes shared across the toolkit.

Every class carries enough context to locate the failing step; the run
loop catches these, records them as events and aborts cleanly.
"""


class SttkError(Exception):
    """Base class for simulation failures."""


class BarrierBreach(SttkError):
    """An avoidance probability dropped to / below its floor epsilon.

    The tube synthesis maintains q > epsilon in continuous time; hitting
    this numerically signals a too-coarse integration step."""

    def __init__(self, obstacle: int, q: float, epsilon: float, t: float):
        self.obstacle = obstacle
        self.q = q
        self.epsilon = epsilon
        self.t = t
        super().__init__(
            f"avoidance probability breached floor at t={t:.6g}: "
            f"obstacle {obstacle} has q={q:.6g} <= epsilon={epsilon:.6g}"
        )


class RadiusCollapse(SttkError):
    """The closed-form tube radius came out non-positive."""

    def __init__(self, r: float, t: float):
        self.r = r
        self.t = t
        super().__init__(f"tube radius collapsed to {r:.6g} at t={t:.6g}")


class StepCollapse(SttkError):
    """Adaptive sub-stepping exhausted its halvings without resolving
    barrier stiffness."""

    def __init__(self, t: float, halvings: int):
        self.t = t
        self.halvings = halvings
        super().__init__(
            f"barrier stiffness unresolved after {halvings} halvings at t={t:.6g}"
        )


class TubeViolation(SttkError):
    """Plant output left the tube; the controller's domain is gone."""

    def __init__(self, e1: float, t: float):
        self.e1 = e1
        self.t = t
        super().__init__(f"output left the tube at t={t:.6g} (normalized error {e1:.9g})")


class FunnelViolation(SttkError):
    """A cascade stage's tracking error left its funnel."""

    def __init__(self, stage: int, component: int, e: float, t: float):
        self.stage = stage
        self.component = component
        self.e = e
        self.t = t
        super().__init__(
            f"stage {stage} component {component} left its funnel at t={t:.6g} "
            f"(normalized error {e:.9g})"
        )


class NumericalBlowup(SttkError):
    """Plant state became non-finite."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"plant state became non-finite at t={t:.6g}")
