"""Decaying special functions and the side-anchored linear flow.

The workhorse is the family U_k^sigma, the unique solution without
exponential growth on the sigma half-line of

    dU/dX = p X**(p-1) U + X**(k-1),        p even, 1 <= k <= p-1,

together with the operator that maps a polynomial-growth forcing v to the
analogous solution of dU/dX = p X**(p-1) U + v(X).  Values come from a
stable integral form (p = 2 has closed forms via erfcx); formal tails at
infinity come from the fixed-point inversion of the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import erfcx, gamma as _gamma

from ._scalar import is_exact
from .errors import (
    BlowupError,
    CaeError,
    DomainError,
    InsufficientTailError,
    SeriesError,
)
from .series import AsymTail, FastFn, TaylorPoly

EXP_CAP = 700.0  # |X|**p beyond this would overflow exp() in double precision
_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


class ExponentCapError(CaeError):
    """The requested value carries an exp(|X|**p) factor past the overflow
    guard."""


def _check_p(p: int):
    if p < 2 or p % 2:
        raise SeriesError(f"root power p={p} must be an even integer >= 2")


# ---------------------------------------------------------------------------
# series at infinity (polynomial part + decaying tail)


class InfSeries:
    """Truncated expansion sum c_m X**-m with m from -top_degree to depth.

    ``depth`` records up to which m the coefficients are known; complete
    series (finite exact expressions) use depth = None.
    """

    __slots__ = ("coeffs", "depth")

    def __init__(self, coeffs: dict, depth: Optional[int]):
        cleaned = {}
        for m, c in coeffs.items():
            if c == 0:
                continue
            if depth is not None and m > depth:
                continue
            cleaned[m] = c
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items())))
        object.__setattr__(self, "depth", depth)

    def __setattr__(self, *a):
        raise AttributeError("InfSeries is immutable")

    @staticmethod
    def zero(depth=None):
        return InfSeries({}, depth)

    @staticmethod
    def from_poly_tail(poly: TaylorPoly, tail: AsymTail,
                       depth: Optional[int] = None) -> "InfSeries":
        coeffs = {-m: c for m, c in enumerate(poly.coeffs)}
        for m in range(1, tail.depth + 1):
            coeffs[m] = tail.coefficient(m)
        if depth is None:
            depth = None if tail.complete else tail.depth
        return InfSeries(coeffs, depth)

    def to_poly_tail(self) -> tuple:
        poly = []
        top = -min(self.coeffs.keys(), default=0)
        poly = [self.coeffs.get(-d, 0) for d in range(0, max(0, top) + 1)]
        d = self.depth if self.depth is not None else max(
            [m for m in self.coeffs if m > 0], default=0
        )
        tail = AsymTail(
            [self.coeffs.get(m, 0) for m in range(1, d + 1)],
            complete=self.depth is None,
        )
        return TaylorPoly(poly), tail

    @property
    def top_degree(self) -> int:
        return -min(self.coeffs.keys(), default=0)

    def coefficient(self, m):
        if self.depth is not None and m > self.depth:
            raise InsufficientTailError(f"coefficient m={m} beyond depth {self.depth}")
        return self.coeffs.get(m, 0)

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other: "InfSeries") -> "InfSeries":
        if self.depth is None:
            depth = other.depth
        elif other.depth is None:
            depth = self.depth
        else:
            depth = min(self.depth, other.depth)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return InfSeries(out, depth)

    def __neg__(self):
        return InfSeries({m: -c for m, c in self.coeffs.items()}, self.depth)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return InfSeries({m: s * c for m, c in self.coeffs.items()}, self.depth)

    def __mul__(self, other: "InfSeries") -> "InfSeries":
        if self.is_zero() or other.is_zero():
            dep = None if (self.depth is None and other.depth is None) else \
                min(d for d in (self.depth, other.depth) if d is not None)
            return InfSeries.zero(dep)
        if self.depth is None and other.depth is None:
            depth = None
        else:
            d1 = self.depth if self.depth is not None else math.inf
            d2 = other.depth if other.depth is not None else math.inf
            depth = int(min(d1 - other.top_degree, d2 - self.top_degree))
        out = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = m1 + m2
                if depth is None or m <= depth:
                    out[m] = out.get(m, 0) + c1 * c2
        return InfSeries(out, depth)

    def derivative(self) -> "InfSeries":
        depth = None if self.depth is None else self.depth + 1
        return InfSeries(
            {m + 1: -m * c for m, c in self.coeffs.items() if m != 0}, depth
        )

    def shift_pow(self, k: int) -> "InfSeries":
        """Multiply by X**k."""
        depth = None if self.depth is None else self.depth - k
        return InfSeries({m - k: c for m, c in self.coeffs.items()}, depth)

    def truncate(self, depth: int) -> "InfSeries":
        return InfSeries(self.coeffs, depth)

    def partial_sum(self, X):
        return math.fsum(float(c) * float(X) ** (-m) for m, c in self.coeffs.items())

    def __eq__(self, other):
        return (
            isinstance(other, InfSeries)
            and self.coeffs == other.coeffs
            and self.depth == other.depth
        )

    def __repr__(self):
        return f"InfSeries({self.coeffs!r}, depth={self.depth})"


# ---------------------------------------------------------------------------
# formal tails of the linear flow


def tail_of_j_series(p: int, v: InfSeries, depth: int) -> InfSeries:
    """Formal expansion at infinity of the polynomial-growth solution of
    U' = p X**(p-1) U + v, by iterating U <- (U' - v)/(p X**(p-1)).

    Each pass gains p-1 orders, so the iteration terminates; the result is
    exact when v's coefficients are exact.  v truncated at depth d yields a
    result trusted to depth d + p - 1 at most.
    """
    _check_p(p)
    if v.depth is not None:
        depth = min(depth, v.depth + p - 1)
    vv = v.truncate(depth) if v.depth is None else v

    def step(u: InfSeries) -> InfSeries:
        src = u.derivative() - vv
        out = {}
        for m, c in src.coeffs.items():
            mm = m + p - 1
            if mm <= depth:
                out[mm] = Fraction(c, p) if is_exact(c) else c / p
        return InfSeries(out, depth)

    u = InfSeries.zero(depth)
    passes = (depth + v.top_degree + p) // (p - 1) + 3
    for _ in range(passes):
        u2 = step(u)
        if u2 == u:
            break
        u = u2
    return u


def tail_of_j(p: int, sigma: int, v_poly, depth: int,
              v_tail: Optional[AsymTail] = None):
    """Formal (polynomial part, tail) of the J-image of v.

    ``v_poly`` may be a TaylorPoly (with optional ``v_tail``) or an
    InfSeries.  The expansion is side-independent; ``sigma`` only selects
    which function realizes it.
    """
    if isinstance(v_poly, InfSeries):
        v = v_poly
    else:
        v = InfSeries.from_poly_tail(
            v_poly, v_tail if v_tail is not None else AsymTail((), complete=True)
        )
    u = tail_of_j_series(p, v, depth)
    return u.to_poly_tail()


_U_TAIL_CACHE: dict = {}


def u_tail(p: int, k: int, depth: int = 16) -> InfSeries:
    """Cached formal tail of U_k (same series for both sides)."""
    key = (p, k, depth)
    if key not in _U_TAIL_CACHE:
        v = InfSeries({-(k - 1): 1}, None)
        _U_TAIL_CACHE[key] = tail_of_j_series(p, v, depth)
    return _U_TAIL_CACHE[key]


# ---------------------------------------------------------------------------
# values of U_k^sigma


def eval_u(p: int, k: int, sigma: int, X, tol: float = 1e-13) -> float:
    """Value of U_k^sigma(X) = e^{X^p} * integral_{sigma*inf}^X e^{-T^p} T^(k-1) dT.

    Within the decay side the integral is evaluated in the stable shifted
    form (closed form via erfcx when p = 2); far out on the decay side the
    asymptotic tail takes over once its remainder bound is below ``tol``.
    Values on the growth side carry an e^{|X|^p} factor and are refused
    beyond the overflow guard.
    """
    _check_p(p)
    if not 1 <= k <= p - 1:
        raise SeriesError(f"k={k} outside 1..{p - 1}")
    if sigma not in (-1, 1):
        raise SeriesError("sigma must be -1 or +1")
    X = float(X)

    if p == 2:
        # U^- = (sqrt(pi)/2) erfcx(-X),  U^+ = -(sqrt(pi)/2) erfcx(X)
        z = -X if sigma < 0 else X
        if z < 0 and z * z > EXP_CAP:
            raise ExponentCapError(
                f"U_1^{'-' if sigma < 0 else '+'}({X}) ~ exp(X^2) overflows"
            )
        val = 0.5 * math.sqrt(math.pi) * float(erfcx(z))
        return val if sigma < 0 else -val

    if sigma * X >= 0:
        # decay side: try the asymptotic tail first
        t = u_tail(p, k)
        if abs(X) > 1.0:
            terms = sorted(t.coeffs.items())
            est = 0.0
            last_m = max(t.coeffs, default=0)
            if last_m:
                est = 2 * abs(float(t.coeffs[last_m])) * abs(X) ** (-(last_m + 1))
            ssum = t.partial_sum(X)
            if est < tol * max(1.0, abs(ssum)) and est < tol:
                return ssum
        # stable shifted quadrature
        s_ = 1.0 if sigma < 0 else -1.0  # T = X + s_*(-s)

        def f(s):
            T = X - s if sigma < 0 else X + s
            return math.exp(X ** p - T ** p) * T ** (k - 1)

        val, _err = integrate.quad(f, 0.0, np.inf, **_QUAD_OPTS)
        return val if sigma < 0 else -val

    # growth side: continuation across 0 with the exponential factor
    if abs(X) ** p > EXP_CAP:
        raise ExponentCapError(
            f"U_{k}^{'-' if sigma < 0 else '+'}({X}) ~ exp(|X|^p) overflows"
        )
    c0 = _gamma(k / p) / p
    base = (-1) ** (k - 1) * c0 if sigma < 0 else -c0

    def g(T):
        return math.exp(-T ** p) * T ** (k - 1)

    inner, _err = integrate.quad(g, 0.0, X, **_QUAD_OPTS)
    return math.exp(X ** p) * (base + inner)


def u_fastfn(p: int, k: int, sigma: int, coef=1, depth: int = 12) -> FastFn:
    """U_k^sigma wrapped as an evaluable fast coefficient."""
    from .series import BasisTerm

    return FastFn.from_basis([BasisTerm("u", p, k, sigma, coef)], depth=depth)


# ---------------------------------------------------------------------------
# Gaussian-type moments


def gauss_moment(p: int, j: int, eps: float = 1.0) -> float:
    """integral_R exp(-t**p/eps) t**j dt: zero for odd j, else
    (2/p) eps**((j+1)/p) Gamma((j+1)/p)."""
    _check_p(p)
    if j < 0:
        raise SeriesError("moment index must be >= 0")
    if j % 2:
        return 0.0
    return (2.0 / p) * float(eps) ** ((j + 1) / p) * float(_gamma((j + 1) / p))


# ---------------------------------------------------------------------------
# the numeric flow map


@dataclass(frozen=True)
class RayFn:
    """Evaluable function on (part of) a half-line, with bookkeeping.

    ``fn``/``dfn`` evaluate the function and its derivative on ``domain``;
    ``tail`` is the formal expansion at sigma * infinity; ``growth`` the
    declared polynomial growth degree.
    """

    sigma: int
    x_min: float
    fn: Callable
    domain: tuple
    growth: int = 0
    tail: Optional[InfSeries] = None
    dfn: Optional[Callable] = None

    def __call__(self, X):
        if not (self.domain[0] - 1e-12 <= X <= self.domain[1] + 1e-12):
            raise DomainError(
                f"X={X} outside [{self.domain[0]}, {self.domain[1]}]"
            )
        return float(self.fn(X))

    def derivative(self, X):
        if self.dfn is None:
            raise DomainError("no derivative data attached")
        return float(self.dfn(X))


def _as_callable(v):
    if isinstance(v, RayFn):
        return v.fn if v.dfn is None else v
    return v


def apply_j(
    p: int,
    sigma: int,
    v,
    v_series: Optional[InfSeries] = None,
    X_far: Optional[float] = None,
    depth: int = 16,
    grid_n: int = 2048,
    rtol: float = 1e-11,
    extend_to: float = 0.0,
) -> RayFn:
    """Unique polynomial-growth solution of dU/dX = p X**(p-1) U + v(X)
    on the sigma side.

    The solution is anchored at sigma*X_far with its asymptotic tail and
    integrated inward (the direction in which the homogeneous mode decays,
    so anchor error washes out), sampled on a dense grid with a cubic
    spline for dense evaluation.  ``extend_to`` >= 0 continues past the
    origin onto the growth side (accuracy degrades with exp(X**p)).

    v may be a RayFn (its ``tail`` supplies the formal part), a plain
    callable with ``v_series`` given, or a constant.
    """
    _check_p(p)
    if sigma not in (-1, 1):
        raise SeriesError("sigma must be -1 or +1")
    if X_far is None:
        X_far = 8.0 if p == 2 else 6.0
    if isinstance(v, RayFn):
        if v_series is None:
            v_series = v.tail
        v_fn = v.fn
    elif callable(v):
        v_fn = v
    else:  # constant
        c = float(v)
        v_fn = lambda X: c
        if v_series is None:
            v_series = InfSeries({0: v}, None)
    if v_series is None:
        raise SeriesError("apply_j needs the formal expansion of v for anchoring")

    u_series = tail_of_j_series(p, v_series, depth)
    x0 = sigma * X_far
    u0 = u_series.partial_sum(x0)

    def rhs(X, y):
        return [p * X ** (p - 1) * y[0] + float(v_fn(X))]

    x_end = -sigma * abs(extend_to)
    xs = np.linspace(x0, x_end, grid_n)
    sol = integrate.solve_ivp(
        rhs, (x0, x_end), [u0], method="RK45", t_eval=xs,
        rtol=rtol, atol=1e-14, max_step=abs(x0 - x_end) / 50.0,
    )
    if not sol.success:
        raise BlowupError(f"flow integration failed: {sol.message}",
                          where=sol.t[-1] if len(sol.t) else x0)
    order = np.argsort(sol.t)
    spline = CubicSpline(sol.t[order], sol.y[0][order])
    dspline = spline.derivative()
    lo, hi = (min(x0, x_end), max(x0, x_end))
    return RayFn(
        sigma=sigma,
        x_min=0.0,
        fn=lambda X: float(spline(X)),
        dfn=lambda X: float(dspline(X)),
        domain=(lo, hi),
        growth=max(0, u_series.top_degree),
        tail=u_series,
    )


def flow_residual(u: RayFn, p: int, v_fn: Callable, n: int = 50) -> float:
    """max |U'(X) - p X^(p-1) U(X) - v(X)| / (1 + |v(X)|) over a grid of
    the stored domain (spline derivative versus the defining equation)."""
    lo, hi = u.domain
    pad = 0.02 * (hi - lo)
    xs = np.linspace(lo + pad, hi - pad, n)
    worst = 0.0
    for X in xs:
        r = abs(u.derivative(X) - p * X ** (p - 1) * u(X) - float(v_fn(X)))
        worst = max(worst, r / (1.0 + abs(float(v_fn(X)))))
    return worst


# ---------------------------------------------------------------------------
# decaying antiderivatives of fast coefficients


def decaying_antiderivative(g, g1: float, p: int, X) -> float:
    """H(X) = integral from sigma*inf to X of (g(T) - g1 * ell'(T)) dT with
    ell'(T) = T^(p-1)/(T^p+1), the branch vanishing at infinity on X's side."""
    g1 = float(g1)

    def f(T):
        val = float(g(T))
        if g1 != 0.0:
            val -= g1 * T ** (p - 1) / (T ** p + 1.0)
        return val

    if X >= 0:
        val, _err = integrate.quad(f, X, np.inf, **_QUAD_OPTS)
        return -val
    val, _err = integrate.quad(f, -np.inf, X, **_QUAD_OPTS)
    return val
