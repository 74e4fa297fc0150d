"""Resonance-condition and reduced-polynomial tests; the substitution
residuals double as exact oracles."""

from fractions import Fraction

import pytest

from cae.errors import DomainError, SeriesError
from cae.series import TaylorPoly
from cae.resonance import (
    ResonanceCase,
    condition_check,
    red_residual,
    riccati_leading_check,
    z0_polynomial,
)

GRID = [3.0, -3.0, 5.0, -5.0, 10.0, -10.0]


class TestCondition:
    @pytest.mark.parametrize(
        "alpha,beta,p,expected",
        [
            (1, 2, 2, True),
            (1, 3, 2, True),
            (1, 2, 4, False),
            (1, 2.5, 2, False),
            (1, 0, 2, True),
            (1, 1, 4, True),
            (1, 4, 4, True),
            (1, -2, 2, False),
            (2, 4, 2, True),
        ],
    )
    def test_truth_table(self, alpha, beta, p, expected):
        assert condition_check(ResonanceCase(alpha, beta, p)) is expected

    def test_integer_tolerance(self):
        assert condition_check(ResonanceCase(1.0, 2.0 + 5e-10, 2))
        assert not condition_check(ResonanceCase(1.0, 2.0 + 5e-8, 2))

    def test_validation(self):
        with pytest.raises(SeriesError):
            ResonanceCase(-1, 2, 2)
        with pytest.raises(SeriesError):
            ResonanceCase(1, 2, 3)


class TestZ0:
    def test_d2_hermite(self):
        z = z0_polynomial(ResonanceCase(1, 2, 2))
        assert z == TaylorPoly([-1, 0, 1])  # X^2 - 1
        # oracle: substitute into Z'' - X Z' + 2 Z
        assert red_residual(ResonanceCase(1, 2, 2), z).is_zero()

    def test_d1_linear(self):
        z = z0_polynomial(ResonanceCase(1, 1, 2))
        assert z == TaylorPoly([0, 1])
        assert red_residual(ResonanceCase(1, 1, 2), z).is_zero()

    def test_d3(self):
        z = z0_polynomial(ResonanceCase(1, 3, 2))
        assert z == TaylorPoly([0, -3, 0, 1])  # X^3 - 3X
        assert red_residual(ResonanceCase(1, 3, 2), z).is_zero()

    @pytest.mark.parametrize("alpha,beta,p", [
        (1, 4, 2), (1, 5, 2), (1, 4, 4), (1, 8, 4), (2, 10, 2),
        (Fraction(1, 2), Fraction(3, 2), 2),
    ])
    def test_degree_parity_and_residual(self, alpha, beta, p):
        case = ResonanceCase(alpha, beta, p)
        z = z0_polynomial(case)
        D = int(round(float(case.D)))
        assert z.degree == D
        assert z.coefficient(D) == 1
        # parity: even D -> even polynomial, D = 1 mod p -> odd
        for m, c in enumerate(z.coeffs):
            if (m - D) % 2 != 0:
                assert c == 0
        assert red_residual(case, z).is_zero()

    def test_condition_violation_raises(self):
        with pytest.raises(SeriesError):
            z0_polynomial(ResonanceCase(1, 2, 4))

    def test_scaling_behavior(self):
        # (alpha, beta) -> (s alpha, s beta) keeps the condition, D, the
        # degree and the parity; the monic polynomial transforms by the
        # variable rescale X -> s^(1/p) X
        base = ResonanceCase(1, 2, 2)
        scaled = ResonanceCase(2, 4, 2)
        assert condition_check(scaled) == condition_check(base)
        zb, zs = z0_polynomial(base), z0_polynomial(scaled)
        assert zs.degree == zb.degree
        assert red_residual(scaled, zs).is_zero()
        s = 2.0
        D = zb.degree
        for m in range(D + 1):
            want = float(zb.coefficient(m)) * s ** ((m - D) / 2)
            assert float(zs.coefficient(m)) == pytest.approx(want, abs=1e-12)


class TestRiccati:
    def test_d2_residual(self):
        assert riccati_leading_check(ResonanceCase(1, 2, 2), GRID) < 1e-10

    def test_d1_residual(self):
        assert riccati_leading_check(ResonanceCase(1, 1, 2), GRID) < 1e-10

    def test_d3_and_p4(self):
        assert riccati_leading_check(ResonanceCase(1, 3, 2), GRID) < 1e-10
        assert riccati_leading_check(ResonanceCase(1, 4, 4), GRID) < 1e-10

    def test_zero_avoidance(self):
        # X^2 - 1 vanishes at +-1; points near them are skipped
        res = riccati_leading_check(ResonanceCase(1, 2, 2), [1.05, 3.0])
        assert res < 1e-10

    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            riccati_leading_check(ResonanceCase(1, 2, 2), [1.0, -1.0, 0.95])
