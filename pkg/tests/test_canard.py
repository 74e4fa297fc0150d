"""Canard-value tests: the connection constant, the angular value curve,
and the control series against closed-form moment oracles."""

import random

import numpy as np
import pytest
from scipy.special import gamma

from cae.errors import SeriesError
from cae.series import TaylorPoly
from cae.canard import (
    ConnectionProblem,
    angular_canard_value,
    canard_control_series,
    reduced_anchor_residual,
    union_jack_anchor_residual,
    union_jack_c0,
    union_jack_rhs,
    _uj_anchor,
)
from cae.special import gauss_moment
from cae.turning import ODESpec, UnsupportedExpansionError, control_expansion

KNOWN_C0 = 0.3621759411  # reference connection constant, 10 digits


class TestUnionJack:
    def test_connection_constant(self):
        c0 = union_jack_c0(tol=1e-8)
        assert c0 == pytest.approx(KNOWN_C0, abs=1e-6)

    def test_zero_control_stays_below(self):
        from cae.canard import _uj_classify

        assert _uj_classify(0.0, 10.0, mirror=False) is False

    def test_mirror_value(self):
        c0 = union_jack_c0(tol=1e-7)
        cm = union_jack_c0(tol=1e-7, mirror=True)
        assert cm == pytest.approx(-c0, abs=2e-7)

    def test_x_far_independence(self):
        a = union_jack_c0(tol=1e-8, X_far=10.0)
        b = union_jack_c0(tol=1e-8, X_far=16.0)
        assert abs(a - b) < 1e-8

    def test_anchor_residual(self):
        assert union_jack_anchor_residual(KNOWN_C0) < 1e-8

    def test_connection_problem_record(self):
        prob = ConnectionProblem(
            rhs=lambda X, Y: union_jack_rhs(X, Y, KNOWN_C0),
            anchor=lambda X: _uj_anchor(KNOWN_C0, X),
            X_far=10.0,
            control=KNOWN_C0,
        )
        assert prob.anchor_residual(side=-1) < 1e-8


class TestAngular:
    def test_zero_eps(self):
        assert angular_canard_value(0.0) == 0.0

    def test_evenness(self):
        for eps in (0.02, 0.01):
            a = angular_canard_value(eps)
            b = angular_canard_value(-eps)
            assert abs(a - b) < 1e-9

    def test_quadratic_leading_order(self):
        eps_list = [0.01, 0.02, 0.04]
        vals = [abs(angular_canard_value(e)) for e in eps_list]
        slope = np.polyfit(np.log(eps_list), np.log(vals), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)

    def test_t_far_independence(self):
        a = angular_canard_value(0.02, T_far=10.0)
        b = angular_canard_value(0.02, T_far=16.0)
        assert abs(a - b) < 1e-10

    def test_reduced_anchor_residual(self):
        # at the D scale the solves actually visit
        assert reduced_anchor_residual(2e-3) < 1e-8

    def test_branch_validity_guard(self):
        with pytest.raises(SeriesError):
            angular_canard_value(0.3)


class TestControlSeries:
    def test_quadratic_forcing_matches_closed_form(self):
        spec = ODESpec(p=2, h={(2, 0): 1}, control=True)
        alphas = canard_control_series(spec, 6)
        # alpha(eps) = -eps/2 exactly: eta^2 coefficient -1/2, others 0
        assert alphas[2] == pytest.approx(-0.5, abs=1e-12)
        for n in (0, 1, 3, 4, 5):
            assert abs(alphas[n]) < 1e-12

    def test_fig_anchor_value(self):
        # eps y' = 4x^3 y + eps(g + alpha), g = 3x^2 + 3x
        spec = ODESpec(p=4, h={(1, 0): 3, (2, 0): 3}, control=True)
        alphas = canard_control_series(spec, 5)
        closed = -3.0 * gamma(0.75) / gamma(0.25)
        assert alphas[2] == pytest.approx(closed, abs=1e-9)
        # quadrature oracle: -moment(g)/moment(1) at eps = 1/4
        eps = 0.25
        oracle = -(3 * gauss_moment(4, 2, eps) + 3 * gauss_moment(4, 1, eps)) \
            / gauss_moment(4, 0, eps)
        val = sum(a * eps ** (n / 4) for n, a in enumerate(alphas))
        assert val == pytest.approx(oracle, abs=1e-12)
        assert val == pytest.approx(-0.507, abs=2e-3)

    def test_odd_forcing_gives_zero_series(self):
        spec = ODESpec(p=4, h={(1, 0): 2, (3, 0): -5}, control=True)
        alphas = canard_control_series(spec, 8)
        assert all(abs(a) < 1e-14 for a in alphas)

    def test_agrees_with_p2_recursion_on_random_quartics(self):
        rng = random.Random(42)
        for _ in range(5):
            g = [rng.uniform(-2, 2) for _ in range(5)]
            spec = ODESpec(
                p=2, h={(j, 0): c for j, c in enumerate(g) if c != 0},
                control=True,
            )
            eta_alphas = canard_control_series(spec, 10)
            eps_alphas = control_expansion(TaylorPoly(g), 2, 5).alphas
            for n in range(5):
                assert eta_alphas[2 * n] == pytest.approx(
                    float(eps_alphas[n]), abs=1e-9
                )
            assert all(abs(a) < 1e-14 for a in eta_alphas[1::2])

    def test_resolved_control_makes_two_sided_solution(self):
        # with the control series resolved, the inner partial sums (which
        # terminate for quadratic forcing) reproduce the bounded solution
        # of eps y' = 4x^3 y + eps(g + alpha) on BOTH half-lines, and the
        # two branches coincide: the canard
        from cae.turning import inner_expansion
        from cae.validate import bounded_solution_quadrature

        spec = ODESpec(p=4, h={(1, 0): 3, (2, 0): 3}, control=True)
        alphas = canard_control_series(spec, 6)
        F = TaylorPoly([0, 0, 0, 0, 1])
        for eps in (0.25, 0.1):
            eta = eps ** 0.25
            alpha_val = sum(a * eta ** n for n, a in enumerate(alphas))
            sides = {s: inner_expansion(spec, 6, s, alphas=alphas) for s in (-1, 1)}
            g = lambda t: 3 * t * t + 3 * t + alpha_val
            for x in (-1.0, -0.3, 0.0, 0.3, 1.0):
                X = x / eta
                for s in (-1, 1):
                    truth = bounded_solution_quadrature(F, g, eps, x, s)
                    total = sum(
                        (sides[s].coeff(n)(X) if sides[s].coeff(n) else 0.0)
                        * eta ** n
                        for n in range(6)
                    )
                    assert abs(truth - total) < 1e-10, (eps, x, s)
                two_sided = abs(
                    bounded_solution_quadrature(F, g, eps, x, 1)
                    - bounded_solution_quadrature(F, g, eps, x, -1)
                )
                assert two_sided < 1e-10

    def test_requires_control_slot(self):
        with pytest.raises(SeriesError):
            canard_control_series(ODESpec(p=2, h={(0, 0): 1}), 3)

    def test_nonlinear_unsupported(self):
        spec = ODESpec(p=2, h={(0, 0): 1}, P={(0, 1, 1): 1}, control=True)
        with pytest.raises(UnsupportedExpansionError):
            canard_control_series(spec, 3)
