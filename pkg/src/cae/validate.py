"""Numeric ground truth and statistical checks.

Linear turning-point problems get their bounded solutions from stable
quadrature (no stepping, no stiffness); everything else integrates with an
adaptive embedded Runge-Kutta pair.  Error tables fit log-log slopes of
sup-errors against the root parameter, and exponential-smallness fits
recover the constants of exp(-A/eta**p) decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import BlowupError, DomainError, SeriesError
from .series import CombinedSeries, TaylorPoly, evaluate_partial_sum
from .special import EXP_CAP, ExponentCapError

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=300)


# ---------------------------------------------------------------------------
# bounded solutions of linear equations by quadrature


def _coercive_on_ray(F: TaylorPoly, sigma: int) -> bool:
    d = F.degree
    if d < 1:
        return False
    lead = float(F.coefficient(d))
    if d % 2 == 0:
        return lead > 0
    return (lead > 0) if sigma > 0 else (lead < 0)


def bounded_solution_quadrature(F, g: Callable, eps: float, x: float,
                                sigma: int) -> float:
    """Value at x of the unique solution of eps y' = F'(x) y + eps g(x)
    bounded on the sigma half-line:

        y(x) = exp(F(x)/eps) * integral_{sigma*inf}^x exp(-F(t)/eps) g(t) dt.

    F is a polynomial primitive with F -> +inf on the sigma ray (checked).
    The integral runs in the shifted variable so the exponent never
    overflows on the decay side; values that genuinely carry an
    exp(large/eps) factor hit the overflow guard.
    """
    if not isinstance(F, TaylorPoly):
        F = TaylorPoly(F)
    if sigma not in (-1, 1):
        raise SeriesError("sigma must be -1 or +1")
    if not _coercive_on_ray(F, sigma):
        raise SeriesError(
            "F is not coercive on the requested half-line; no bounded branch"
        )
    Fx = float(F(x))
    # overflow guard: max of (F(x) - F(t))/eps over the integration ray
    dF = F.derivative()
    crit = [x]
    if dF.degree >= 1:
        roots = np.roots(list(reversed([float(c) for c in dF.coeffs])))
        for rt in roots:
            # keep critical points on the integration ray (t <= x for the
            # left-bounded branch, t >= x for the right one)
            if abs(rt.imag) < 1e-12 and sigma * (rt.real - x) >= 0:
                crit.append(rt.real)
    peak = max((Fx - float(F(t))) / eps for t in crit)
    if peak > EXP_CAP:
        raise ExponentCapError(
            f"bounded solution at x={x} carries exp({peak:.3g}); beyond the cap"
        )

    if sigma < 0:
        f = lambda s: math.exp((Fx - float(F(x - s))) / eps) * float(g(x - s))
        return _quad_ray(f)
    f = lambda s: math.exp((Fx - float(F(x + s))) / eps) * float(g(x + s))
    return -_quad_ray(f)


def _quad_ray(f) -> float:
    """Half-line quadrature; QUADPACK's roundoff notice is demoted to a
    hard check on its own error estimate (steep relief shoulders trip the
    notice while the estimate stays far below any tolerance used here)."""
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, np.inf, **_QUAD_OPTS)
    if err > 1e-9 * max(1.0, abs(val)):
        raise SeriesError(f"quadrature failed to converge (est. error {err:.2e})")
    return val


# ---------------------------------------------------------------------------
# general ODE integration


@dataclass(frozen=True)
class Trajectory:
    ts: np.ndarray
    ys: np.ndarray
    dense: Callable
    blowup: bool
    t_blow: Optional[float] = None

    def __call__(self, t):
        lo, hi = min(self.ts[0], self.ts[-1]), max(self.ts[0], self.ts[-1])
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise DomainError(f"t={t} outside computed span [{lo}, {hi}]")
        out = self.dense(t)
        return float(out[0]) if out.shape == (1,) else out

    @property
    def final(self):
        y = self.ys[:, -1]
        return float(y[0]) if y.shape == (1,) else y


def ode_solve(rhs: Callable, t_span, y0, tol: float = 1e-10,
              cap: float = 1e8, max_step: float = np.inf,
              events=None) -> Trajectory:
    """Adaptive embedded Runge-Kutta 5(4) trajectory with dense output and
    blowup detection: |y| reaching ``cap`` ends the integration early and
    flags the (partial) trajectory."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    fun = lambda t, y: np.atleast_1d(rhs(t, y if y.size > 1 else y[0]))

    def blow(t, y):
        return float(np.max(np.abs(y))) - cap

    blow.terminal = True
    evs = [blow] + list(events or [])
    sol = integrate.solve_ivp(
        fun, t_span, y0, method="RK45", rtol=tol, atol=tol * 1e-3,
        dense_output=True, events=evs, max_step=max_step,
    )
    if sol.status < 0:
        raise BlowupError(f"integration failed: {sol.message}",
                          where=sol.t[-1] if len(sol.t) else t_span[0])
    hit = sol.status == 1 and len(sol.t_events[0]) > 0
    return Trajectory(
        ts=sol.t, ys=sol.y, dense=sol.sol, blowup=hit,
        t_blow=float(sol.t_events[0][0]) if hit else None,
    )


# ---------------------------------------------------------------------------
# error scaling


@dataclass(frozen=True)
class ErrorTable:
    """Sup-errors per eps plus the log-log slope in eta = eps**(1/p).

    ``degenerate`` marks tables whose errors sit at the floating-point
    noise floor; the slope is meaningless there and the O(eta**N) bound
    holds vacuously."""

    rows: tuple  # (eps, sup_error)
    N: int
    p: int
    slope: Optional[float]
    intercept: Optional[float]
    degenerate: bool

    def passes(self, slack: float = 0.3) -> bool:
        if self.degenerate:
            return True
        return self.slope is not None and self.slope >= self.N - slack


def error_scaling(
    series,
    truth: Callable,
    eps_list: Sequence[float],
    x_grid: Sequence[float],
    N: int,
    p: Optional[int] = None,
    noise_floor: float = 1e-11,
) -> ErrorTable:
    """Sup-norm errors of the N-term partial sums against ``truth(x, eps)``
    over the x-grid, one row per eps, with the least-squares slope of
    log(sup error) against log(eta).

    ``series`` is a CombinedSeries (evaluated through its partial sums) or
    a callable (x, eps, N).  eps values must be strictly decreasing, at
    least three, and span a factor >= 4.
    """
    eps_list = list(eps_list)
    if len(eps_list) < 3:
        raise SeriesError("need at least 3 eps values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise SeriesError("eps values must be strictly decreasing")
    if eps_list[0] / eps_list[-1] < 4:
        raise SeriesError("eps values must span at least a factor 4")
    if isinstance(series, CombinedSeries):
        p = series.p
        approx = lambda x, eps, n: evaluate_partial_sum(
            series, x, eps ** (1.0 / series.p), n
        )
    else:
        if p is None:
            raise SeriesError("callable series needs an explicit p")
        approx = series

    rows = []
    scale = 1.0
    for eps in eps_list:
        worst = 0.0
        for x in x_grid:
            t = float(truth(x, eps))
            scale = max(scale, abs(t))
            worst = max(worst, abs(approx(x, eps, N) - t))
        rows.append((eps, worst))

    floor = noise_floor * scale
    degenerate = all(err <= floor for _eps, err in rows)
    slope = intercept = None
    if not degenerate and all(err > 0 for _eps, err in rows):
        xs = np.array([math.log(eps) / p for eps, _e in rows])  # log eta
        ys = np.array([math.log(err) for _e, err in rows])
        slope, intercept = np.polyfit(xs, ys, 1)
        slope, intercept = float(slope), float(intercept)
    return ErrorTable(tuple(rows), N, p, slope, intercept, degenerate)


# ---------------------------------------------------------------------------
# exponential smallness


@dataclass(frozen=True)
class ExpFit:
    A: float
    C: float
    residual: float
    exponential: bool  # False means "not exponentially small"


def exp_smallness_fit(values: Sequence, p: int,
                      residual_threshold: float = 0.25) -> ExpFit:
    """Fit |d| = C exp(-A / eta**p) through (eta, |d|) pairs by least
    squares of log|d| against eta**-p.  A fitted A <= 0 (or a bad fit)
    reports the data as not exponentially small."""
    pts = [(float(e), float(d)) for e, d in values]
    if len(pts) < 2:
        raise SeriesError("need at least 2 points")
    if any(d <= 0 for _e, d in pts):
        raise SeriesError("differences must be positive")
    xs = np.array([e ** (-p) for e, _d in pts])
    ys = np.array([math.log(d) for _e, d in pts])
    coef = np.polyfit(xs, ys, 1)
    A = -float(coef[0])
    C = math.exp(float(coef[1]))
    resid = float(np.sqrt(np.mean((np.polyval(coef, xs) - ys) ** 2)))
    ok = A > 0 and resid <= residual_threshold * max(1.0, float(np.std(ys)))
    return ExpFit(A=A, C=C, residual=resid, exponential=ok)
