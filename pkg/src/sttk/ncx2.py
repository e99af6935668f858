"""Noncentral chi-squared distribution: CDF, PDF and quantile.

The squared norm of an n-dimensional Gaussian vector with unit covariance
and mean offset follows this law, which makes it the workhorse behind every
avoidance-probability query in the tube synthesis.  The CDF is evaluated as
a Poisson(lam/2)-weighted mixture of central chi-squared CDFs, summed
bidirectionally from the modal Poisson index so the dominant terms are
accumulated first.  Central chi-squared CDFs reduce to the regularized
lower incomplete gamma function, computed by power series for small
arguments and by continued fraction otherwise.

Everything here is a pure function of its arguments; no global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

# Residual Poisson tail mass at which the mixture series is truncated.
# Mixture terms are bounded by 1, so the absolute CDF error is below this.
_TAIL_MASS = 1e-14

# |F(x) - p| tolerance for the quantile solver.
_QUANTILE_TOL = 1e-10
_MAX_QUANTILE_ITER = 200

_EPS = 2.22e-16


class ConvergenceError(RuntimeError):
    """Quantile refinement failed to converge; signals a series or
    tolerance misconfiguration rather than a user error."""


@dataclass(frozen=True)
class Ncx2Params:
    """Degrees of freedom (output-space dimension) and noncentrality."""

    dof: int
    noncentrality: float

    def __post_init__(self):
        if not isinstance(self.dof, int) or self.dof < 1:
            raise ValueError(f"dof must be a positive integer, got {self.dof!r}")
        if not math.isfinite(self.noncentrality) or self.noncentrality < 0.0:
            raise ValueError(
                f"noncentrality must be finite and >= 0, got {self.noncentrality!r}"
            )


# Stirling-series tail of log Gamma: lgamma(a) = (a-1/2)ln a - a + ln(2pi)/2 + corr(a).
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_gpref(a: float, x: float) -> float:
    """log(x^a e^-x / Gamma(a)), computed without the catastrophic
    cancellation the naive `a*log(x) - x - lgamma(a)` suffers when a and x
    are both large and close (the regime of large noncentrality).  Outside
    that zone the naive form is well conditioned and used directly."""
    if a < 10.0 or x < 0.5 * a or x > 2.0 * a:
        return a * math.log(x) - x - math.lgamma(a)
    d = (x - a) / a
    # a*log(x/a) + a - x = -a*(d - log1p(d)) with d - log1p(d) >= 0
    phi = d - math.log1p(d)
    inv_a2 = 1.0 / (a * a)
    corr = 0.0
    for coeff in reversed(_STIRLING[1:]):
        corr = (corr + coeff) * inv_a2
    corr = (corr + _STIRLING[0]) / a
    return -a * phi + 0.5 * math.log(a) - _HALF_LOG_2PI - corr


def _reg_gamma_pair(a: float, x: float) -> tuple[float, float]:
    """Regularized incomplete gamma pair (P(a, x), Q(a, x)), a > 0, x >= 0.

    The branch that is naturally small is computed directly (series for
    P below x < a+1, continued fraction for Q above), so tail values keep
    full relative precision."""
    if x <= 0.0:
        return 0.0, 1.0
    if x < a + 1.0:
        # Power series; terms decrease once k > x.
        term = 1.0 / a
        total = term
        k = 1
        while True:
            term *= x / (a + k)
            total += term
            if abs(term) < abs(total) * _EPS:
                break
            k += 1
            if k > 100_000:  # unreachable for the parameter ranges used here
                raise ConvergenceError(f"incomplete gamma series stalled at a={a}, x={x}")
        p = total * math.exp(_log_gpref(a, x))
        return p, 1.0 - p
    # Continued fraction for the upper function Q(a, x), modified Lentz.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            q = h * math.exp(_log_gpref(a, x))
            return 1.0 - q, q
    raise ConvergenceError(f"incomplete gamma continued fraction stalled at a={a}, x={x}")


def _reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), a > 0, x >= 0."""
    return _reg_gamma_pair(a, x)[0]


def _check(x: float, params: Ncx2Params) -> None:
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"argument must be finite and >= 0, got {x!r}")


def _poisson_logpmf(i: int, lam2: float) -> float:
    if i == 0:
        return -lam2
    return _log_gpref(i + 1.0, lam2) - math.log(lam2)


def _poisson_tail(p_up: float, i_up: int, p_down: float, i_down: int, lam2: float) -> float:
    """Upper bound on the Poisson mass not yet consumed by the mixture sum.

    Both tails are dominated by geometric series once past the mode, so the
    bound is robust to the roundoff that plagues `1 - accumulated_mass`.
    """
    r_up = lam2 / (i_up + 1)
    tail = math.inf if r_up >= 1.0 else p_up * r_up / (1.0 - r_up)
    if i_down > 0:
        r_down = i_down / lam2
        if r_down >= 1.0:
            return math.inf
        tail += p_down * r_down / (1.0 - r_down)
    return tail


def _tail_shortcut(x: float, n: int, lam: float) -> float | None:
    """Deep-tail detection by the triangle inequality.

    With Z Gaussian around a mean of norm sqrt(lam), the events
    {|Z| <= sqrt(x)} and {|Z| >= sqrt(x)} each force |Z - mean| to exceed
    |sqrt(lam) - sqrt(x)|, whose probability is a central chi-squared tail.
    When that bound is below the series truncation mass the CDF is 0 or 1
    to within the advertised error, with no mixture walk."""
    gap = math.sqrt(lam) - math.sqrt(x)
    if abs(gap) < 8.0:  # central tail cannot be small enough yet
        return None
    if _reg_gamma_pair(0.5 * n, 0.5 * gap * gap)[1] <= _TAIL_MASS:
        return 0.0 if gap > 0.0 else 1.0
    return None


# Per-side window half-width holding all Poisson mass but < 1e-15 of it.
def _window(lam2: float) -> int:
    return int(9.0 * math.sqrt(lam2) + 20.0)


# Above this lam/2 the windowed vector evaluation beats the scalar walk.
_VECTOR_LAM2 = 40.0


def _mix_vector(n: int, lam2: float, xh: float, want_pdf: bool) -> tuple[float, float]:
    """Windowed, vectorized form of the Poisson-mixture sum.

    Identical recurrences as the scalar walk, evaluated over the fixed
    index window [i0 - w, i0 + w] with cumulative products; the window
    holds all but < 1e-15 of the Poisson mass."""
    i0 = int(lam2)
    w = _window(lam2)
    i_lo = max(0, i0 - w)
    n_up = w
    n_dn = i0 - i_lo
    a0 = 0.5 * n + i0

    p0 = math.exp(_poisson_logpmf(i0, lam2))
    pois_up = p0 * np.cumprod(lam2 / np.arange(i0 + 1.0, i0 + n_up + 1.0))
    c0 = _reg_lower_gamma(a0, xh)
    d0 = math.exp(_log_gpref(a0, xh) - math.log(a0))
    # c_{i0+k} = c0 - [D(a0) + ... + D(a0+k-1)]
    d_up = d0 * np.concatenate(([1.0], np.cumprod(xh / (a0 + np.arange(1.0, n_up)))))
    c_up = c0 - np.cumsum(d_up)
    np.clip(c_up, 0.0, 1.0, out=c_up)
    total = p0 * c0 + float(pois_up @ c_up)
    mass = p0 + float(pois_up.sum())

    if n_dn > 0:
        pois_dn = p0 * np.cumprod(np.arange(float(i0), i_lo, -1.0) / lam2)
        # c_{i0-k} = c0 + [D(a0-1) + ... + D(a0-k)]
        d1 = d0 * a0 / xh
        d_dn = d1 * np.concatenate(
            ([1.0], np.cumprod((a0 - np.arange(1.0, n_dn)) / xh))
        )
        c_dn = c0 + np.cumsum(d_dn)
        np.clip(c_dn, 0.0, 1.0, out=c_dn)
        total += float(pois_dn @ c_dn)
        mass += float(pois_dn.sum())

    if not (mass > 1.0 - 5e-13) or not math.isfinite(total):
        raise ConvergenceError(
            f"vectorized mixture lost mass at n={n}, lam={2 * lam2}, x={2 * xh}"
        )
    cdf = min(max(total, 0.0), 1.0)
    if not want_pdf:
        return cdf, 0.0

    h0 = d0 * a0 / (2.0 * xh)
    h_up = h0 * np.cumprod(xh / (a0 + np.arange(0.0, n_up)))
    dens = p0 * h0 + float(pois_up @ h_up)
    if n_dn > 0:
        h_dn = h0 * np.cumprod((a0 - np.arange(1.0, n_dn + 1.0)) / xh)
        dens += float(pois_dn @ h_dn)
    return cdf, max(dens, 0.0)


def ncx2_cdf(x: float, params: Ncx2Params) -> float:
    """CDF of the noncentral chi-squared law at x.

    Poisson-mixture series over central chi-squared CDFs, truncated when
    the residual Poisson mass drops below 1e-14; absolute error <= 1e-12.
    """
    _check(x, params)
    n, lam = params.dof, params.noncentrality
    if x == 0.0:
        return 0.0
    xh = 0.5 * x
    if lam == 0.0:
        return _reg_lower_gamma(0.5 * n, xh)

    shortcut = _tail_shortcut(x, n, lam)
    if shortcut is not None:
        return shortcut

    lam2 = 0.5 * lam
    if lam2 > _VECTOR_LAM2:
        return _mix_vector(n, lam2, xh, want_pdf=False)[0]
    i0 = int(lam2)
    a0 = 0.5 * n + i0

    # Modal Poisson weight and central-CDF value, then walk outward.
    p_up = p_down = math.exp(_poisson_logpmf(i0, lam2))
    c0 = _reg_lower_gamma(a0, xh)
    # d_up = xh^a e^-xh / Gamma(a+1) links consecutive central CDFs:
    # P(a+1, xh) = P(a, xh) - d(a).
    d_up = math.exp(_log_gpref(a0, xh) - math.log(a0))

    total = p_up * c0

    c_up = c_down = c0
    d_down = d_up
    a_up = a_down = a0
    i_up = i_down = i0

    while _poisson_tail(p_up, i_up, p_down, i_down, lam2) >= _TAIL_MASS:
        # one step up
        p_up *= lam2 / (i_up + 1)
        c_up -= d_up
        if c_up < 0.0:  # roundoff guard; true value is tiny and positive
            c_up = 0.0
        d_up *= xh / (a_up + 1.0)
        i_up += 1
        a_up += 1.0
        total += p_up * c_up
        # one step down (stops at index 0)
        if i_down > 0:
            p_down *= i_down / lam2
            d_down *= a_down / xh
            a_down -= 1.0
            c_down += d_down
            if c_down > 1.0:
                c_down = 1.0
            i_down -= 1
            total += p_down * c_down
        if i_up - i0 > 1_000_000:
            raise ConvergenceError(
                f"noncentral mixture stalled at n={n}, lam={lam}, x={x}"
            )

    if total < 0.0:
        return 0.0
    return min(total, 1.0)


def ncx2_pdf(x: float, params: Ncx2Params) -> float:
    """Density of the noncentral chi-squared law at x.

    Same Poisson-mixture structure as the CDF, with central chi-squared
    densities as mixture components.
    """
    _check(x, params)
    n, lam = params.dof, params.noncentrality
    if x == 0.0:
        # Limiting density at the origin: finite only for n >= 2.
        if n == 1:
            return math.inf
        if n == 2:
            return 0.5 * math.exp(-0.5 * lam)
        return 0.0
    xh = 0.5 * x

    def central_logpdf(a: float) -> float:
        # density of chi2 with 2a dof, expressed through xh = x/2
        return _log_gpref(a, xh) - math.log(xh) - math.log(2.0)

    if lam == 0.0:
        return math.exp(central_logpdf(0.5 * n))

    lam2 = 0.5 * lam
    i0 = int(lam2)
    a0 = 0.5 * n + i0

    p_up = p_down = math.exp(_poisson_logpmf(i0, lam2))
    h0 = math.exp(central_logpdf(a0))
    total = p_up * h0

    h_up = h_down = h0
    a_up = a_down = a0
    i_up = i_down = i0

    while _poisson_tail(p_up, i_up, p_down, i_down, lam2) >= _TAIL_MASS:
        p_up *= lam2 / (i_up + 1)
        h_up *= xh / a_up
        a_up += 1.0
        i_up += 1
        total += p_up * h_up
        if i_down > 0:
            p_down *= i_down / lam2
            h_down *= (a_down - 1.0) / xh
            a_down -= 1.0
            i_down -= 1
            total += p_down * h_down
        if i_up - i0 > 1_000_000:
            raise ConvergenceError(
                f"noncentral pdf mixture stalled at n={n}, lam={lam}, x={x}"
            )

    # The mixture terms pois(i) * pdf_central(x; n + 2i) are log-concave in
    # i with peak at i* solving i*(i + n/2) = lam2 * xh.  The mass-based walk
    # is centered on the Poisson mode instead; in deep tails the two are far
    # apart and the walk misses the dominant terms (absolute error stays
    # below the tail mass, but the value degrades in relative terms, or
    # underflows outright).  Rescan around the true peak in log space then.
    half_n = 0.5 * n
    i_star = int(0.5 * (-half_n + math.sqrt(half_n * half_n + 4.0 * lam2 * xh)))
    if total > 0.0 and i_down - 1 <= i_star <= i_up + 1:
        return total

    def log_term(i: int) -> float:
        return _poisson_logpmf(i, lam2) + central_logpdf(half_n + i)

    best = log_term(i_star)
    total = math.exp(best) if best > -745.0 else 0.0
    for direction in (1, -1):
        i = i_star + direction
        while i >= 0:
            lt = log_term(i)
            if lt > -745.0:
                total += math.exp(lt)
            if lt < best - 46.0:
                break
            best = max(best, lt)
            i += direction
    return total


def _cdf_pdf(x: float, params: Ncx2Params) -> tuple[float, float]:
    """CDF and PDF in a single Poisson-mixture walk (shared weights).

    In the deep tails the density is reported as 0; the quantile solver
    only uses it for Newton steps and falls back to bisection there."""
    n, lam = params.dof, params.noncentrality
    if x == 0.0:
        return 0.0, ncx2_pdf(0.0, params)
    xh = 0.5 * x
    if lam == 0.0:
        a = 0.5 * n
        return (
            _reg_lower_gamma(a, xh),
            math.exp(_log_gpref(a, xh) - math.log(xh) - math.log(2.0)),
        )

    shortcut = _tail_shortcut(x, n, lam)
    if shortcut is not None:
        return shortcut, 0.0

    lam2 = 0.5 * lam
    if lam2 > _VECTOR_LAM2:
        return _mix_vector(n, lam2, xh, want_pdf=True)
    i0 = int(lam2)
    a0 = 0.5 * n + i0

    p_up = p_down = math.exp(_poisson_logpmf(i0, lam2))
    c0 = _reg_lower_gamma(a0, xh)
    d_up = math.exp(_log_gpref(a0, xh) - math.log(a0))
    h0 = d_up * a0 / (2.0 * xh)  # central pdf at the modal index

    total_c = p_up * c0
    total_h = p_up * h0

    c_up = c_down = c0
    h_up = h_down = h0
    d_down = d_up
    a_up = a_down = a0
    i_up = i_down = i0

    while _poisson_tail(p_up, i_up, p_down, i_down, lam2) >= _TAIL_MASS:
        p_up *= lam2 / (i_up + 1)
        c_up -= d_up
        if c_up < 0.0:
            c_up = 0.0
        h_up *= xh / a_up
        d_up *= xh / (a_up + 1.0)
        i_up += 1
        a_up += 1.0
        total_c += p_up * c_up
        total_h += p_up * h_up
        if i_down > 0:
            p_down *= i_down / lam2
            d_down *= a_down / xh
            h_down *= (a_down - 1.0) / xh
            a_down -= 1.0
            c_down += d_down
            if c_down > 1.0:
                c_down = 1.0
            i_down -= 1
            total_c += p_down * c_down
            total_h += p_down * h_down
        if i_up - i0 > 1_000_000:
            raise ConvergenceError(
                f"noncentral mixture stalled at n={n}, lam={lam}, x={x}"
            )

    return min(max(total_c, 0.0), 1.0), max(total_h, 0.0)


def ncx2_quantile(p: float, params: Ncx2Params, bracket_hint: float | None = None) -> float:
    """Inverse CDF: x with |ncx2_cdf(x) - p| <= 1e-10.

    Brackets the root (doubling the upper bound as needed), then refines by
    Newton steps safeguarded by bisection.  `bracket_hint` (a nearby
    previous solution) seeds the search; it never changes the result, only
    the iteration count.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    n, lam = params.dof, params.noncentrality

    if bracket_hint is not None and math.isfinite(bracket_hint) and bracket_hint > 0.0:
        # Warm path: safeguarded Newton from the hint, bracket built as we
        # go.  Falls through to the cold path if the hint was poor.
        lo, hi = 0.0, math.inf
        x = bracket_hint
        for _ in range(12):
            f, density = _cdf_pdf(x, params)
            if abs(f - p) <= _QUANTILE_TOL:
                return x
            if f < p:
                lo = x
            else:
                hi = x
            if density > 0.0:
                step = x - (f - p) / density
            else:
                step = math.nan
            if lo < step < hi:
                x = step
            elif math.isfinite(hi):
                x = 0.5 * (lo + hi)
            else:
                x = 2.0 * x + 1.0

    mean = n + lam
    sd = math.sqrt(2.0 * (n + 2.0 * lam))
    lo = 0.0
    if lam > 1e4:
        # Normal approximation as a bracket seed only; accuracy still comes
        # from the CDF itself.
        hi = max(mean + (NormalDist().inv_cdf(p) + 3.0) * sd, sd)
    else:
        hi = mean + 10.0 * sd + 10.0
    f_hi = ncx2_cdf(hi, params)
    while f_hi < p:
        lo = hi
        hi *= 2.0
        f_hi = ncx2_cdf(hi, params)
        if hi > 1e300:
            raise ConvergenceError(f"quantile bracket ran away for p={p}, n={n}, lam={lam}")

    x = 0.5 * (lo + hi)
    for _ in range(_MAX_QUANTILE_ITER):
        f, density = _cdf_pdf(x, params)
        if abs(f - p) <= _QUANTILE_TOL:
            return x
        if f < p:
            lo = x
        else:
            hi = x
        if density > 0.0:
            step = x - (f - p) / density
            x = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            x = 0.5 * (lo + hi)
    raise ConvergenceError(
        f"quantile refinement exceeded {_MAX_QUANTILE_ITER} iterations for "
        f"p={p}, n={n}, lam={lam}"
    )
