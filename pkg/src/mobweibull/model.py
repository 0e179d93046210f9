"""Marshall-Olkin bivariate Weibull distribution with distinct shape parameters.

The pair (X, Y) arises from three independent Weibull shocks U0, U1, U2 with
shapes alpha0, alpha1, alpha2 and a common scale-rate lambda:

    X = min(U1, U0),   Y = min(U2, U0).

The shared shock U0 gives the event {X = Y} positive probability, so the
distribution has an absolutely continuous density off the diagonal and a
singular component on it. All diagonal quantities (tie probability, mean
time to failure) require numerical integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec, integrate_semi_infinite

PARAM_NAMES = ("alpha0", "alpha1", "alpha2", "lambda")


@dataclass(frozen=True)
class Params:
    """Parameter vector (alpha0, alpha1, alpha2, lambda), all strictly positive."""

    alpha0: float
    alpha1: float
    alpha2: float
    lam: float

    def __post_init__(self):
        for name, value in zip(PARAM_NAMES, self.as_tuple()):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def shape_sum(self) -> float:
        return self.alpha0 + self.alpha1 + self.alpha2

    def as_tuple(self):
        return (self.alpha0, self.alpha1, self.alpha2, self.lam)

    def as_dict(self):
        return dict(zip(PARAM_NAMES, self.as_tuple()))

    @classmethod
    def from_sequence(cls, values) -> "Params":
        vals = [float(v) for v in values]
        if len(vals) != 4:
            raise ValueError(f"expected 4 parameters, got {len(vals)}")
        return cls(*vals)


def _power_sum(t: float, theta: Params) -> float:
    """t^alpha0 + t^alpha1 + t^alpha2, returning inf on overflow."""
    try:
        return t**theta.alpha0 + t**theta.alpha1 + t**theta.alpha2
    except OverflowError:
        return math.inf


def survival(x: float, y: float, theta: Params) -> float:
    """Joint survival P(X >= x, Y >= y)."""
    if x < 0.0 or y < 0.0:
        raise ValueError(f"survival requires x, y >= 0, got ({x}, {y})")
    z = max(x, y)
    try:
        exponent = x**theta.alpha1 + y**theta.alpha2 + z**theta.alpha0
    except OverflowError:
        return 0.0
    return math.exp(-theta.lam * exponent)


def min_survival(t: float, theta: Params) -> float:
    """Survival of T = min(X, Y); identical to survival(t, t, theta)."""
    if t < 0.0:
        raise ValueError(f"min_survival requires t >= 0, got {t}")
    return math.exp(-theta.lam * _power_sum(t, theta))


@lru_cache(maxsize=512)
def _tie_probability_cached(theta: Params, quad: QuadratureSpec) -> float:
    a0, a1, a2, lam = theta.as_tuple()

    def integrand(x):
        s = _power_sum(x, theta)
        if s == math.inf:
            return 0.0
        return lam * (a1 * x ** (a1 - 1.0) + a2 * x ** (a2 - 1.0)) * math.exp(-lam * s)

    off_diagonal = integrate_semi_infinite(integrand, quad)
    value = 1.0 - off_diagonal
    slack = max(quad.abs_tol, quad.rel_tol)
    if value < -slack or value > 1.0 + slack:
        raise QuadratureError(
            f"tie probability {value} outside [0, 1] by more than the quadrature tolerance"
        )
    return min(1.0, max(0.0, value))


def tie_probability(theta: Params, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """P(X = Y): mass of the singular component on the diagonal.

    Computed as one minus the off-diagonal mass
    lambda * int_0^inf (a1 x^(a1-1) + a2 x^(a2-1)) exp(-lambda(x^a0+x^a1+x^a2)) dx.
    Results are memoized per (theta, quad) since likelihood evaluation asks
    for the same value once per parameter vector.
    """
    return _tie_probability_cached(theta, quad)


def density(x: float, y: float, theta: Params, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Joint density; on the diagonal this is the singular-component density.

    Off the diagonal the value is the mixed partial of the survival function.
    On it, the density of the shared-shock failure time is scaled by the tie
    probability, which costs one (memoized) quadrature.
    """
    if x <= 0.0 or y <= 0.0:
        raise ValueError(f"density requires x, y > 0, got ({x}, {y})")
    a0, a1, a2, lam = theta.as_tuple()
    if x < y:
        return (
            lam**2
            * a1
            * x ** (a1 - 1.0)
            * (a2 * y ** (a2 - 1.0) + a0 * y ** (a0 - 1.0))
            * math.exp(-lam * (x**a1 + y**a2 + y**a0))
        )
    if y < x:
        return (
            lam**2
            * a2
            * y ** (a2 - 1.0)
            * (a1 * x ** (a1 - 1.0) + a0 * x ** (a0 - 1.0))
            * math.exp(-lam * (y**a2 + x**a1 + x**a0))
        )
    rate = a1 * x ** (a1 - 1.0) + a2 * x ** (a2 - 1.0) + a0 * x ** (a0 - 1.0)
    return tie_probability(theta, quad) * lam * rate * math.exp(-lam * _power_sum(x, theta))


def mttf(theta: Params, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Mean time to failure of the series system: int_0^inf S(t, t) dt."""
    return integrate_semi_infinite(lambda t: min_survival(t, theta), quad)
