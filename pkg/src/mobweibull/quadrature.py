"""Adaptive quadrature facility shared by the distribution and fitting code.

The integrals that show up here (tie probability, mean time to failure,
mode-specific failure probabilities) have no closed form, so everything is
routed through one adaptive Gauss-Kronrod integrator with explicit
tolerances. Semi-infinite domains are mapped onto (0, 1) with
t = u / (1 - u) before refinement; quadrature nodes never touch the
endpoints, which keeps integrable power-law singularities at 0 harmless.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature could not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for the adaptive integrator."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()


def integrate_finite(f, a: float, b: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integrate ``f`` over (a, b) to within max(abs_tol, rel_tol * |result|)."""
    if not a < b:
        raise ValueError(f"integration bounds must satisfy a < b, got ({a}, {b})")
    result = integrate.quad(
        f,
        a,
        b,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        limit=quad.max_subdivisions,
        full_output=1,
    )
    if len(result) > 3:
        # QUADPACK appends a message only when it could not converge.
        raise QuadratureError(str(result[3]).replace("\n", " ").strip())
    return result[0]


def integrate_semi_infinite(f, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integrate ``f`` over (0, inf) via the substitution t = u / (1 - u)."""

    def mapped(u):
        w = 1.0 - u
        return f(u / w) / (w * w)

    return integrate_finite(mapped, 0.0, 1.0, quad)
