"""Canard values: the Union Jack connection constant, the angular-canard
value curve, and the order-by-order control series at a multiple turning
point.

All connection problems integrate inward from a tail anchor at X_far (the
stable direction) and the scalar solves are bracketed bisections or
safeguarded root finds; results are independent of X_far once the anchors
sit in the asymptotic regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate, optimize

from .errors import BlowupError, SeriesError
from .special import gauss_moment
from .turning import ODESpec, UnsupportedExpansionError, _g_polynomials


# ---------------------------------------------------------------------------
# connection-problem plumbing


@dataclass(frozen=True)
class ConnectionProblem:
    """A scalar connection problem dY/dX = rhs(X, Y) with a declared tail
    anchor function and an additive control parameter baked into rhs."""

    rhs: Callable
    anchor: Callable
    X_far: float
    control: float = 0.0

    def anchor_residual(self, side: int = 1, h: float = 1e-4) -> float:
        """|Y'(X0) - rhs(X0, Y(X0))| at X0 = side*X_far, with Y' taken from
        the anchor by a centered difference."""
        X0 = side * self.X_far
        der = (self.anchor(X0 + h) - self.anchor(X0 - h)) / (2 * h)
        return abs(der - self.rhs(X0, self.anchor(X0)))


def _anchor_residual(rhs, anchor_fn, X0, h=1e-4):
    der = (anchor_fn(X0 + h) - anchor_fn(X0 - h)) / (2 * h)
    return abs(der - rhs(X0, anchor_fn(X0)))


# ---------------------------------------------------------------------------
# Union Jack connection constant


def _uj_anchor(c, X):
    """Tail of the solution vanishing at -inf: c/X^2 + 2c/X^5 +
    (c^3 + 10c)/X^8 + (14c^3 + 80c)/X^11."""
    return (
        c / X ** 2
        + 2 * c / X ** 5
        + (c ** 3 + 10 * c) / X ** 8
        + (14 * c ** 3 + 80 * c) / X ** 11
    )


def union_jack_rhs(X, Y, c):
    return Y * (Y - X) * (Y + X) + c


def _uj_classify(c: float, X_far: float, mirror: bool) -> bool:
    """Integrate from -X_far and classify the exit: True when the
    trajectory escapes past the guard line Y = max(X, 0) + 1 (upward, for
    the direct problem) or Y = -max(X, 0) - 1 (downward, for the mirror).

    Trajectories that connect to the growing branch cross the guard and
    blow up; all others stay between the guard lines to the right edge
    (the connecting orbit itself clears the line by a comfortable margin).
    """

    def rhs(X, y):
        return [union_jack_rhs(X, y[0], c)]

    if not mirror:
        def guard(X, y):
            return y[0] - (max(X, 0.0) + 1.0)
        guard.direction = 1.0
    else:
        def guard(X, y):
            return y[0] + (max(X, 0.0) + 1.0)
        guard.direction = -1.0
    guard.terminal = True

    def low(X, y):  # opposite-side exit, also a non-connection
        return y[0] + 1.0 if not mirror else y[0] - 1.0
    low.terminal = True
    low.direction = -1.0 if not mirror else 1.0

    sol = integrate.solve_ivp(
        rhs, (-X_far, X_far), [_uj_anchor(c, -X_far)],
        method="RK45", rtol=1e-11, atol=1e-13, events=[guard, low],
    )
    if len(sol.t_events[0]) > 0:
        return True
    if sol.status < 0:  # integrator death from a runaway trajectory
        last = sol.y[0][-1]
        return last > 0 if not mirror else last < 0
    return False


def union_jack_c0(tol: float = 1e-10, X_far: float = 10.0,
                  mirror: bool = False) -> float:
    """Connection constant of dY/dX = Y(Y-X)(Y+X) + c: the unique c in
    (0, 1) joining the solution that vanishes at -infinity to the branch
    growing like X at +infinity (``mirror=True`` connects to -X instead
    and returns the opposite constant).

    Bisection on c: trajectories escaping above the guard line bracket
    from one side, bounded or downward exits from the other.
    """
    if tol < 1e-10:
        raise SeriesError("tolerance below the supported bisection resolution")
    if not mirror:
        lo, hi = 0.0, 1.0  # classify(lo)=False (Y=0 stays), classify(hi)=True
    else:
        lo, hi = 0.0, -1.0
    if _uj_classify(lo, X_far, mirror) or not _uj_classify(hi, X_far, mirror):
        raise SeriesError("endpoints do not bracket the connection value")
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if _uj_classify(mid, X_far, mirror):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def union_jack_anchor_residual(c: float, X_far: float = 10.0) -> float:
    return _anchor_residual(
        lambda X, Y: union_jack_rhs(X, Y, c),
        lambda X: _uj_anchor(c, X),
        -X_far,
    )


# ---------------------------------------------------------------------------
# angular canard value curve


def _reduced_tail_coeffs(D: float):
    """Tail V ~ w1/T + w3/T^3 + w5/T^5 + w7/T^7 of the decaying branch of
    V' = T V + V^2 + D at +infinity."""
    w1 = -D
    w3 = D - D * D
    w5 = w3 * (2 * D - 3)
    w7 = -(5 + 2 * w1) * w5 - w3 * w3
    return w1, w3, w5, w7


def _reduced_anchor(D: float, T: float) -> float:
    w1, w3, w5, w7 = _reduced_tail_coeffs(D)
    return w1 / T + w3 / T ** 3 + w5 / T ** 5 + w7 / T ** 7


def _vd0(D: float, T_far: float = 10.0) -> float:
    """V_d(0, D): value at 0 of the solution of V' = T V + V**2 + D that
    vanishes at +infinity, anchored four tail terms deep."""
    sol = integrate.solve_ivp(
        lambda T, v: [T * v[0] + v[0] ** 2 + D],
        (T_far, 0.0), [_reduced_anchor(D, T_far)],
        method="RK45", rtol=1e-12, atol=1e-14,
    )
    if not sol.success:
        raise BlowupError("inward integration of the reduced equation failed",
                          where=sol.t[-1])
    return float(sol.y[0][-1])


def reduced_anchor_residual(D: float, T_far: float = 10.0) -> float:
    return _anchor_residual(
        lambda T, V: T * V + V ** 2 + D,
        lambda T: _reduced_anchor(D, T),
        T_far,
    )


def angular_canard_value(eps: float, tol: float = 1e-10,
                         T_far: float = 10.0) -> float:
    """Canard value c(eps) of the classical angular problem: the root of

        gamma(eps)  V_d(0, (c - d(eps)) / gamma(eps)**2)
      = -gamma(-eps) V_d(0, (c - d(-eps)) / gamma(-eps)**2)

    with d + d**2 = eps and gamma**2 = 1 + 2 d.  Requires |eps| < 1/4 so
    both branches are real; the value curve is even in eps.
    """
    if abs(eps) >= 0.25:
        raise SeriesError("|eps| must be below 1/4 for real branch data")
    if eps == 0:
        return 0.0

    def d_of(e):
        return 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * e))

    def gamma_of(e):
        return (1.0 + 4.0 * e) ** 0.25

    dp, dm = d_of(eps), d_of(-eps)
    gp, gm = gamma_of(eps), gamma_of(-eps)

    def F(c):
        left = gp * _vd0((c - dp) / gp ** 2, T_far)
        right = gm * _vd0((c - dm) / gm ** 2, T_far)
        return left + right

    span = max(8.0 * eps * eps, 1e-5)
    lo, hi = -span, span
    flo, fhi = F(lo), F(hi)
    grow = 0
    while flo * fhi > 0:
        lo, hi = 2 * lo, 2 * hi
        flo, fhi = F(lo), F(hi)
        grow += 1
        if grow > 30:
            raise SeriesError("could not bracket the angular canard value")
    return float(optimize.brentq(F, lo, hi, xtol=tol, rtol=1e-15))


# ---------------------------------------------------------------------------
# control series at a multiple turning point


def canard_control_series(spec: ODESpec, N: int) -> list:
    """Control coefficients alpha_0..alpha_{N-1} (graded in eta) making the
    inner expansions from both sides agree order by order.

    At each order the forcing is G_n(X) + alpha_n with G_n known; the
    two-sided matching condition is the vanishing Gaussian-type moment

        integral_R exp(-s**p) (G_n(s) + alpha_n) ds = 0,

    solved for alpha_n.  Supported for the y-linear control family; the
    moment of the control slot is a positive Gamma value, so the linear
    solve cannot degenerate there (guarded anyway).
    """
    if not spec.control:
        raise SeriesError("spec has no control slot")
    if not spec.linear_in_y:
        raise UnsupportedExpansionError(
            "control series for y-dependent equations are outside the "
            "supported family"
        )
    p = spec.p
    m0 = gauss_moment(p, 0, 1.0)
    if not m0 > 0:
        raise SeriesError("degenerate control moment")
    g_polys = _g_polynomials(spec, N, alphas=None)
    alphas = []
    for n in range(N):
        moment = math.fsum(
            float(c) * gauss_moment(p, j, 1.0)
            for j, c in enumerate(g_polys[n].coeffs)
            if c != 0
        )
        alphas.append(-moment / m0)
    return alphas
