"""Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.

Per-step cost at order ``alpha`` is the Renyi divergence between
``N(0, s^2)`` and the mixture ``(1 - q) N(0, s^2) + q N(1, s^2)``, taking the
worse of the two directions.  Both are evaluated by adaptive quadrature over
the real line.  Costs compose additively over steps and are turned into an
(epsilon, delta) guarantee by minimizing a conversion bound over the order grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

_BASE_ORDERS = (1.25, 1.5, 2, 3, 4, 6, 8, 16, 32, 64, 256, 1024, 4096, 1e6)
# dense band where the optimum usually sits for delta ~ 1e-5
_BAND = (
    tuple(np.round(np.arange(1.1, 2.0, 0.1), 2))
    + tuple(np.arange(2.5, 12.5, 0.5))
    + tuple(range(13, 33))
    + tuple(range(36, 65, 4))
)
DEFAULT_ORDERS = tuple(sorted({float(a) for a in _BASE_ORDERS + _BAND}))

QUAD_EPSREL = 1e-11
CONVERSIONS = ("improved", "classic")


def _log_mixture_ratio(z, q, sigma):
    """log of (mixture density / base density) at scalar ``z``."""
    t = (2.0 * z - 1.0) / (2.0 * sigma * sigma)
    if t < 30.0:
        return math.log1p(q * math.expm1(t))
    a, b = math.log1p(-q), math.log(q) + t
    return b + math.log1p(math.exp(a - b))


def _mixture_weight(z, q, sigma):
    """Posterior weight of the shifted component; d(log-ratio)/dz = weight / s^2."""
    t = (2.0 * z - 1.0) / (2.0 * sigma * sigma)
    return float(special.expit(t + special.logit(q)))


def _stationary_points(c, q, sigma):
    """Roots of ``z = c * w(z)``, the critical points of the log-integrand."""
    h = lambda z: z - c * _mixture_weight(z, q, sigma)  # noqa: E731
    if c <= 0:
        return [optimize.brentq(h, c - 1.0, 1.0, xtol=1e-14, rtol=1e-15)]
    # h is monotone between the points where w(1 - w) = s^2 / c
    edges = [-1.0, c + 1.0]
    disc = 1.0 - 4.0 * sigma**2 / c
    if disc > 0:
        for w in ((1 - math.sqrt(disc)) / 2, (1 + math.sqrt(disc)) / 2):
            z = sigma**2 * (special.logit(w) - special.logit(q)) + 0.5
            if edges[0] < z < edges[1]:
                edges.append(float(z))
    edges.sort()
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if h(lo) == 0.0:
            roots.append(lo)
        elif h(lo) * h(hi) < 0:
            roots.append(optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-15))
    return roots


def _quad_pieces(func, points):
    total = 0.0
    bounds = [-math.inf] + sorted(set(points)) + [math.inf]
    with warnings.catch_warnings():
        # huge orders cannot reach QUAD_EPSREL; their costs are far from the optimum
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if lo == hi:
                continue
            val, _ = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=500)
            total += val
    return total


def _log_moment(c, q, sigma):
    """log E_{z ~ N(0, s^2)}[ratio(z)^c], with ratio = mixture / base density."""
    log_norm = -math.log(sigma * math.sqrt(2 * math.pi))
    two_var = 2.0 * sigma * sigma

    def g(z):
        return -(z * z) / two_var + log_norm + c * _log_mixture_ratio(z, q, sigma)

    roots = _stationary_points(c, q, sigma)
    peak = max(g(r) for r in roots)
    points = [0.5]
    for r in roots:
        w = _mixture_weight(r, q, sigma)
        curv = (1.0 - c * w * (1.0 - w) / sigma**2) / sigma**2
        width = 1.0 / math.sqrt(abs(curv)) if curv != 0 else sigma
        points += [r] + [r + s * k * width for s in (-1, 1) for k in (1, 4, 16, 64)]
    total = _quad_pieces(lambda z: math.exp(g(z) - peak), points)
    log_moment = peak + math.log(total)
    if log_moment > 1.0:
        return log_moment

    # near-zero divergence: integrate base * expm1(c * log_ratio) to avoid cancellation
    def excess(z):
        cl = c * _log_mixture_ratio(z, q, sigma)
        if cl < 700.0:
            return math.exp(-(z * z) / two_var + log_norm) * math.expm1(cl)
        return math.exp(g(z))

    return math.log1p(_quad_pieces(excess, points))


def _validate_step_args(q, sigma, alpha):
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"sampling probability q must be in [0, 1], got {q}")
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"noise multiplier must be finite and >= 0, got {sigma}")
    if not alpha > 1.0:
        raise ValueError(f"Renyi order must exceed 1, got {alpha}")


@lru_cache(maxsize=4096)
def _rdp_step_cost(q, sigma, alpha):
    if q == 0.0:
        return 0.0
    if sigma == 0.0:
        return math.inf
    if q == 1.0:
        return alpha / (2.0 * sigma**2)
    remove = _log_moment(alpha, q, sigma) / (alpha - 1.0)
    add = _log_moment(-(alpha - 1.0), q, sigma) / (alpha - 1.0)
    return max(remove, add, 0.0)


def rdp_step_cost(q, sigma, alpha):
    """Renyi-DP cost of one subsampled Gaussian step at order ``alpha``.

    Returns ``inf`` when ``sigma == 0`` and ``q > 0`` (no privacy).
    """
    q, sigma, alpha = float(q), float(sigma), float(alpha)
    _validate_step_args(q, sigma, alpha)
    return _rdp_step_cost(q, sigma, alpha)


def rdp_to_epsilon(orders, rdp, delta, conversion="improved"):
    """Smallest epsilon over the order grid and the order that achieves it.

    ``"classic"`` uses ``rdp + log(1/delta)/(alpha - 1)``; ``"improved"`` uses the
    hypothesis-testing bound ``rdp + log((alpha-1)/alpha) - (log delta + log alpha)/(alpha-1)``,
    which is never worse.
    """
    orders = np.asarray(orders, dtype=float)
    rdp = np.asarray(rdp, dtype=float)
    if orders.size == 0:
        raise RuntimeError("cannot convert to (epsilon, delta): empty order grid")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if conversion == "classic":
        eps = rdp + math.log(1.0 / delta) / (orders - 1.0)
    elif conversion == "improved":
        eps = (
            rdp
            + np.log1p(-1.0 / orders)
            - (math.log(delta) + np.log(orders)) / (orders - 1.0)
        )
    else:
        raise ValueError(f"conversion must be one of {CONVERSIONS}, got {conversion!r}")
    if np.all(np.isnan(eps)):
        return math.inf, float(orders[0])
    idx = int(np.nanargmin(eps))
    return max(0.0, float(eps[idx])), float(orders[idx])


@dataclass(frozen=True)
class PrivacyLedger:
    """Privacy state of one data holder: step count plus per-step costs.

    Costs at ``steps`` are ``steps * step_costs`` exactly, which keeps composition
    additive regardless of how the steps were accumulated.
    """

    q: float
    sigma: float
    delta: float = 1e-5
    orders: tuple = DEFAULT_ORDERS
    steps: int = 0
    conversion: str = "improved"
    step_costs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _validate_step_args(float(self.q), float(self.sigma), 2.0)
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.conversion not in CONVERSIONS:
            raise ValueError(f"conversion must be one of {CONVERSIONS}")
        object.__setattr__(self, "orders", tuple(float(a) for a in self.orders))
        costs = np.array([rdp_step_cost(self.q, self.sigma, a) for a in self.orders])
        costs.setflags(write=False)
        object.__setattr__(self, "step_costs", costs)

    @property
    def rdp_costs(self):
        if self.steps == 0:
            return np.zeros_like(self.step_costs)
        return self.steps * self.step_costs

    def accumulate(self, steps=1):
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        if steps == 0:
            return self
        return replace(self, steps=self.steps + int(steps))

    def with_steps(self, steps):
        return replace(self, steps=int(steps))

    def epsilon(self):
        return epsilon_for_delta(self)[0]


def accumulate(ledger, steps):
    return ledger.accumulate(steps)


def epsilon_for_delta(ledger):
    """(epsilon, best_order) for the ledger's delta."""
    return rdp_to_epsilon(ledger.orders, ledger.rdp_costs, ledger.delta, ledger.conversion)


def compute_epsilon(q, sigma, steps, delta, orders=DEFAULT_ORDERS, conversion="improved"):
    """Convenience wrapper: epsilon after ``steps`` subsampled Gaussian steps."""
    ledger = PrivacyLedger(q, sigma, delta, orders, int(steps), conversion)
    return ledger.epsilon()


def calibrate_sigma(target_epsilon, q, steps, delta, lo=0.05, hi=200.0, **kwargs):
    """Smallest noise multiplier whose epsilon does not exceed ``target_epsilon``.

    Solved by bisection on log(sigma); the result is rounded up to 6 significant
    digits so that it survives a text round-trip without crossing the budget.
    """
    if target_epsilon <= 0:
        raise ValueError("target epsilon must be positive")
    if steps == 0 or q == 0:
        return lo

    def gap(log_sigma):
        return compute_epsilon(q, math.exp(log_sigma), steps, delta, **kwargs) - target_epsilon

    if gap(math.log(hi)) > 0:
        raise ValueError(f"target epsilon {target_epsilon} unreachable with sigma <= {hi}")
    if gap(math.log(lo)) <= 0:
        return lo
    root = optimize.brentq(gap, math.log(lo), math.log(hi), xtol=1e-10)
    sigma = math.exp(root)
    rounded = float(f"{sigma:.6g}")
    while compute_epsilon(q, rounded, steps, delta, **kwargs) > target_epsilon:
        # one unit in the sixth significant digit
        unit = 10.0 ** (math.floor(math.log10(rounded)) - 5)
        rounded = float(f"{rounded + unit:.6g}")
    return rounded
