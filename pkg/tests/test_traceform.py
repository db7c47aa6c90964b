"""Tests for rational test functions and trace formulas."""

import numpy as np
import pytest

from ssf_lab.linop import AccumulativePair
from ssf_lab.traceform import (
    RationalFunction,
    Term,
    TraceReport,
    hilbert_on_rational,
    krein_baseline,
    mu_term,
    project_minus,
    project_plus,
    residue_at_infinity,
    trace_adjoint_formula,
    trace_lhs,
    trace_rhs_xi,
    trace_rhs_zeta,
)

UPPER_POLE = RationalFunction.simple(1j)
LOWER_POLE = RationalFunction.simple(-2j)


def test_terms_are_merged():
    """Test that terms sharing pole and order are added."""
    f = RationalFunction.from_terms([(1j, 1, 1.0), (1j, 1, 2.0), (1j, 2, 1.0)])
    assert len(f.terms) == 2
    assert Term(1j, 1, 3.0) in f.terms


@pytest.mark.parametrize("pole, order", [(1.0, 1), (1j, 0)])
def test_invalid_terms(pole, order):
    """Test that real poles and nonpositive orders are refused."""
    with pytest.raises(ValueError):
        RationalFunction.simple(pole, order)


def test_evaluation_and_derivative():
    """Test f and f' of 2/(λ - i)² against a finite difference."""
    f = RationalFunction.simple(1j, order=2, coeff=2.0)
    lam = 0.7
    assert f(lam) == pytest.approx(2.0 / (lam - 1j) ** 2)
    h = 1e-6
    numeric = (f(lam + h) - f(lam - h)) / (2 * h)
    assert f.derivative()(lam) == pytest.approx(numeric, rel=1e-6)


def test_algebra():
    """Test sums, scalar products and conjugate reflection."""
    f = UPPER_POLE + 2 * LOWER_POLE - UPPER_POLE
    assert f(0.5) == pytest.approx(2.0 / (0.5 + 2j))
    reflected = UPPER_POLE.conjugate_reflection()
    assert reflected(0.3) == pytest.approx(np.conj(UPPER_POLE(0.3)))


def test_projections():
    """Test the split by half-plane of the poles."""
    f = UPPER_POLE + LOWER_POLE
    assert project_plus(f).poles.tolist() == [-2j]
    assert project_minus(f).poles.tolist() == [1j]


def test_hilbert_on_rational():
    """Test T[1/(1+λ²)] = λ/(1+λ²) and T T = -1."""
    lorentz = (RationalFunction.simple(1j) - RationalFunction.simple(-1j)) * (1 / 2j)
    t = hilbert_on_rational(lorentz)
    lam = np.linspace(-3, 3, 7)
    assert np.allclose(t(lam), lam / (1 + lam**2))
    assert np.allclose(hilbert_on_rational(t)(lam), -lorentz(lam))


def test_residue_at_infinity():
    """Test the residue at infinity of c/(λ - p)."""
    f = 3.0 * UPPER_POLE + RationalFunction.simple(2j, order=2)
    assert residue_at_infinity(f) == pytest.approx(-3.0)


def test_mu_term_empty():
    """Test that no singular masses give no contribution."""
    assert mu_term(UPPER_POLE) == 0


def test_mu_term_point_mass():
    """Test one point mass at zero."""
    value = mu_term(LOWER_POLE, masses=[(0.0, 1.0)])
    expected = -1.0 / (2j) ** 2 / (np.pi * 1j)
    assert value == pytest.approx(expected)


# ---------------------------------------------------------------------------
# Trace formulas
# ---------------------------------------------------------------------------


def test_trace_lhs_rank_one(rank_one_pair):
    """Test tr(f(H) - f(H0)) = -i/2 for both benchmark functions."""
    assert trace_lhs(rank_one_pair, UPPER_POLE) == pytest.approx(-0.5j)
    assert trace_lhs(rank_one_pair, LOWER_POLE) == pytest.approx(-0.5j)


@pytest.mark.parametrize("f", [UPPER_POLE, LOWER_POLE], ids=["upper", "lower"])
def test_trace_zeta_form_rank_one(rank_one_pair, rank_one_data, f):
    """Test the ζ-form against the matrix trace."""
    assert trace_rhs_zeta(rank_one_pair, rank_one_data, f) == pytest.approx(-0.5j, abs=1e-3)


def test_trace_zeta_form_two_level(two_level_pair, two_level_data):
    """Test the ζ-form on a mixed function."""
    f = UPPER_POLE + RationalFunction.simple(0.5 - 3j, order=2, coeff=0.3)
    lhs = trace_lhs(two_level_pair, f)
    assert trace_rhs_zeta(two_level_pair, two_level_data, f) == pytest.approx(lhs, abs=1e-3)


@pytest.mark.parametrize("f", [UPPER_POLE, LOWER_POLE], ids=["upper", "lower"])
def test_trace_xi_form_rank_one(rank_one_pair, rank_one_data, f):
    """Test the ξ-form and its duality cross-check."""
    report = trace_rhs_xi(rank_one_pair, rank_one_data, f)
    assert isinstance(report, TraceReport)
    assert report.lhs == pytest.approx(-0.5j)
    assert report.residual < 1e-3
    assert report.duality_gap < 1e-3


def test_trace_xi_form_two_level(two_level_pair, two_level_data):
    """Test the ξ-form with eigenvalue terms from a lower pole."""
    f = RationalFunction.simple(-3j) + RationalFunction.simple(1 + 1j, order=2)
    report = trace_rhs_xi(two_level_pair, two_level_data, f)
    assert report.rhs_terms["eigenvalue_sum"] != 0
    assert report.residual < 1e-3


@pytest.mark.parametrize("order", [1, 2, 3])
def test_trace_xi_form_higher_order_poles(two_level_pair, two_level_data, order):
    """Test the ξ-form for an upper pole of growing order."""
    f = RationalFunction.simple(1 + 2j, order=order)
    report = trace_rhs_xi(two_level_pair, two_level_data, f)
    assert report.residual < 1e-3 * max(1.0, abs(report.lhs))


def test_trace_adjoint_formula(two_level_pair):
    """Test tr(f(H) - f(H*)) as a sum over eigenvalues."""
    f = UPPER_POLE + LOWER_POLE * 0.5
    lhs, rhs, residual = trace_adjoint_formula(two_level_pair, f)
    assert residual < 1e-9
    assert abs(lhs) > 0


def test_krein_baseline_one_dimensional():
    """Test H0 = 0, V = 1: ξ = 1 on (0, 1), so int f' ξ = f(1) - f(0)."""
    lhs, rhs, residual = krein_baseline(np.zeros((1, 1)), np.ones((1, 1)), UPPER_POLE)
    assert lhs == pytest.approx(UPPER_POLE(1.0) - UPPER_POLE(0.0))
    assert residual < 1e-3


def test_krein_baseline_indefinite():
    """Test a sign-indefinite self-adjoint perturbation."""
    h0 = np.diag([-1.0, 1.0])
    v = np.array([[0.5, 0.3], [0.3, -0.4]])
    f = RationalFunction.simple(0.2 + 1j, coeff=1.0) + RationalFunction.simple(-1 - 2j, 2)
    _, _, residual = krein_baseline(h0, v, f)
    assert residual < 1e-3


def test_krein_baseline_dimension_mismatch():
    """Test that H0 and V must match."""
    with pytest.raises(ValueError):
        krein_baseline(np.eye(2), np.eye(1), UPPER_POLE)


def test_trace_lhs_needs_rational_off_spectrum():
    """Test that a pole on an eigenvalue of H is refused."""
    from ssf_lab.errors import PoleNearSpectrumError

    pair = AccumulativePair.from_arrays(np.zeros((1, 1)), np.ones((1, 1)))
    with pytest.raises(PoleNearSpectrumError):
        trace_lhs(pair, RationalFunction.simple(-1j))
