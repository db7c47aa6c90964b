"""Rational test functions and trace formulas.

Test functions are finite sums ``sum c (λ - p)^-k`` with poles off the real
axis. For ``H = H0 - iV`` the trace ``tr(f(H) - f(H0))`` is computed directly
and from the boundary data in two forms:

- ζ-form: a pole in the upper half-plane contributes ``(1/(pi i)) int f' ζ``;
  a pole in the lower half-plane contributes ``-(1/(pi i)) int f' ζ`` plus
  ``sum_k f(z_k) - f(conj z_k)`` over the eigenvalues of H below the axis.
- ξ-form: ``sum_k (P+ f)(z_k) - (P+ f)(conj z_k) + (A) int f' ξ``, with the
  A-integral cross-checked against ``-(1/pi) int (T f') ζ``.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ssf_lab.errors import InconsistentDualityError
from ssf_lab.genint import a_integral, integrate
from ssf_lab.linop import (
    AccumulativePair,
    HermitianMatrix,
    apply_rational,
    eig_general,
    eig_hermitian,
)
from ssf_lab.pertdet import (
    BoundaryData,
    EpsilonSchedule,
    boundary_from_operators,
    graded_grid,
)

__all__ = [
    "Term",
    "RationalFunction",
    "TraceReport",
    "project_plus",
    "project_minus",
    "hilbert_on_rational",
    "residue_at_infinity",
    "mu_term",
    "trace_lhs",
    "trace_rhs_zeta",
    "trace_rhs_xi",
    "trace_adjoint_formula",
    "krein_baseline",
]

POLE_TOL = 1e-8
DUALITY_TOL = 1e-2


class Term(NamedTuple):
    pole: complex
    order: int
    coeff: complex


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """``sum_j coeff_j (λ - pole_j)^-order_j`` with poles off the real axis.

    Terms sharing (pole, order) are merged on construction.
    """

    terms: Tuple[Term, ...] = ()

    def __post_init__(self):
        merged: Dict[Tuple[complex, int], complex] = {}
        for pole, order, coeff in self.terms:
            pole, order, coeff = complex(pole), int(order), complex(coeff)
            if abs(pole.imag) <= POLE_TOL:
                raise ValueError(f"Pole {pole} lies on the real axis")
            if order < 1:
                raise ValueError(f"Order must be at least 1, got {order}")
            merged[(pole, order)] = merged.get((pole, order), 0j) + coeff
        object.__setattr__(
            self, "terms", tuple(Term(p, k, c) for (p, k), c in merged.items())
        )

    @classmethod
    def simple(cls, pole: complex, order: int = 1, coeff: complex = 1.0) -> "RationalFunction":
        """The single term ``coeff (λ - pole)^-order``."""
        return cls((Term(pole, order, coeff),))

    @classmethod
    def from_terms(cls, terms: Iterable[Sequence]) -> "RationalFunction":
        return cls(tuple(Term(*t) for t in terms))

    @property
    def poles(self) -> np.ndarray:
        return np.array([t.pole for t in self.terms], dtype=complex)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros(lam.shape, dtype=complex)
        for pole, order, coeff in self.terms:
            out = out + coeff * (lam - pole) ** (-order)
        return out

    def derivative(self) -> "RationalFunction":
        return RationalFunction(
            tuple(Term(p, k + 1, -k * c) for p, k, c in self.terms)
        )

    def conjugate_reflection(self) -> "RationalFunction":
        """``λ -> conj f(conj λ)``."""
        return RationalFunction(
            tuple(Term(p.conjugate(), k, c.conjugate()) for p, k, c in self.terms)
        )

    def select(self, keep) -> "RationalFunction":
        return RationalFunction(tuple(t for t in self.terms if keep(t)))

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return RationalFunction(self.terms + other.terms)

    def __mul__(self, scalar: complex) -> "RationalFunction":
        if isinstance(scalar, RationalFunction):
            return NotImplemented
        return RationalFunction(tuple(Term(p, k, c * scalar) for p, k, c in self.terms))

    __rmul__ = __mul__

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self + other * -1.0

    def __repr__(self) -> str:
        parts = [f"{c:.4g}*(λ-({p:.4g}))^-{k}" for p, k, c in self.terms]
        return "RationalFunction(" + (" + ".join(parts) or "0") + ")"


@dataclass
class TraceReport:
    """Both sides of the ξ-form trace formula."""

    f: RationalFunction
    lhs: complex
    rhs_terms: Dict[str, complex] = field(default_factory=dict)
    residual: float = 0.0

    @property
    def rhs(self) -> complex:
        keys = ("eigenvalue_sum", "a_integral_xi", "mu_term", "a_term")
        return sum((self.rhs_terms.get(k, 0j) for k in keys), 0j)

    @property
    def duality_gap(self) -> float:
        return float(abs(self.rhs_terms["a_integral_xi"] - self.rhs_terms["zeta_integral"]))


# ---------------------------------------------------------------------------
# Algebra on test functions
# ---------------------------------------------------------------------------


def project_plus(f: RationalFunction) -> RationalFunction:
    """Terms with poles in the lower half-plane (upper Hardy class)."""
    return f.select(lambda t: t.pole.imag < 0)


def project_minus(f: RationalFunction) -> RationalFunction:
    """Terms with poles in the upper half-plane."""
    return f.select(lambda t: t.pole.imag > 0)


def hilbert_on_rational(f: RationalFunction) -> RationalFunction:
    """``T f``: each term times ``i sign(Im pole)``."""
    return RationalFunction(
        tuple(Term(p, k, c * 1j * np.sign(p.imag)) for p, k, c in f.terms)
    )


def residue_at_infinity(f: RationalFunction) -> complex:
    """Residue at infinity, ``-c_1`` for ``f ~ c_1 / w``."""
    return -sum((c for _, k, c in f.terms if k == 1), 0j)


def mu_term(f: RationalFunction, masses: Sequence[Tuple[float, float]] = ()) -> complex:
    """``(1/(pi i)) int (P+ f')(λ) (1 + λ²) dμ(λ)`` for a discrete measure.

    :param masses: (location, mass) pairs; empty at finite dimension
    """
    g = project_plus(f.derivative())
    total = 0j
    for location, mass in masses:
        total += mass * complex(g(location)) * (1.0 + location**2)
    return total / (np.pi * 1j)


def _eigen_sum(f: RationalFunction, eigenvalues: np.ndarray) -> complex:
    if eigenvalues.size == 0 or not f.terms:
        return 0j
    return complex(np.sum(f(eigenvalues) - f(eigenvalues.conj())))


# ---------------------------------------------------------------------------
# Trace engines
# ---------------------------------------------------------------------------


def trace_lhs(pair: AccumulativePair, f: RationalFunction) -> complex:
    """``tr(f(H) - f(H0))`` from matrix functions."""
    value = complex(np.trace(apply_rational(pair.h, f) - apply_rational(pair.h0.entries, f)))
    spec_h = eig_general(pair).eigenvalues
    spec_h0 = eig_hermitian(pair.h0)[0]
    oracle = complex(np.sum(f(spec_h)) - np.sum(f(spec_h0)))
    if abs(oracle - value) > 1e-9 * max(abs(value), 1.0):
        logger.warning(f"Trace {value} and eigenvalue sum {oracle} disagree")
    return value


def _zeta_moment(data: BoundaryData, g: RationalFunction) -> complex:
    value, _ = integrate(data.zeta_function().multiply(g))
    return complex(value)


def trace_rhs_zeta(pair: AccumulativePair, data: BoundaryData, f: RationalFunction) -> complex:
    """ζ-form of the trace, term by term by half-plane of the pole."""
    lower = eig_general(pair).lower
    total = 0j
    for term in f.terms:
        single = RationalFunction((term,))
        moment = _zeta_moment(data, single.derivative()) / (np.pi * 1j)
        if term.pole.imag > 0:
            total += moment
        else:
            total += -moment + _eigen_sum(single, lower)
    return total


def trace_rhs_xi(
    pair: AccumulativePair,
    data: BoundaryData,
    f: RationalFunction,
    a: float = 0.0,
    masses: Sequence[Tuple[float, float]] = (),
    lhs: Optional[complex] = None,
) -> TraceReport:
    """ξ-form of the trace with the A-integral computed two ways.

    :param a: coefficient of the linear inner factor (zero at finite dimension)
    :param masses: discrete singular measure (empty at finite dimension)
    :param lhs: precomputed matrix trace, computed when omitted
    :raises InconsistentDualityError: when the A-integral and its ζ dual differ by more than 1e-2
    """
    lhs = trace_lhs(pair, f) if lhs is None else lhs
    lower = eig_general(pair).lower
    plus = project_plus(f)
    fprime = f.derivative()
    direct = a_integral(data.xi_function().multiply(fprime)).value
    dual = -_zeta_moment(data, hilbert_on_rational(fprime)) / np.pi
    terms = {
        "eigenvalue_sum": _eigen_sum(plus, lower),
        "a_integral_xi": complex(direct),
        "zeta_integral": complex(dual),
        "mu_term": mu_term(f, masses),
        "a_term": -1j * a * residue_at_infinity(plus),
    }
    gap = abs(terms["a_integral_xi"] - terms["zeta_integral"])
    if gap > DUALITY_TOL * max(1.0, abs(dual)):
        raise InconsistentDualityError(
            f"(A) int f' xi = {direct} but -(1/pi) int (T f') zeta = {dual}"
        )
    report = TraceReport(f=f, lhs=complex(lhs), rhs_terms=terms)
    report.residual = float(abs(report.lhs - report.rhs))
    return report


def trace_adjoint_formula(
    pair: AccumulativePair, f: RationalFunction
) -> Tuple[complex, complex, float]:
    """``tr(f(H) - f(H*)) = sum_k f(z_k) - f(conj z_k)`` over nonreal eigenvalues."""
    lhs = complex(np.trace(apply_rational(pair.h, f) - apply_rational(pair.h_adjoint, f)))
    rhs = _eigen_sum(f, eig_general(pair).lower)
    return lhs, rhs, float(abs(lhs - rhs))


def krein_baseline(
    h0,
    v,
    f: RationalFunction,
    grid: Optional[np.ndarray] = None,
    schedule: Optional[EpsilonSchedule] = None,
    gap_rel: float = 1e-3,
) -> Tuple[complex, complex, float]:
    """Self-adjoint check ``tr(f(H) - f(H0)) = int f' ξ`` for ``H = H0 + V``.

    ξ comes from the same branch tracking as the accumulative case, with the
    eigenvalues of both operators as break points.

    :param h0: Hermitian matrix
    :param v: Hermitian perturbation, sign-indefinite allowed
    """
    h0 = h0 if isinstance(h0, HermitianMatrix) else HermitianMatrix.from_array(h0, check_tol=1e-10)
    v = v if isinstance(v, HermitianMatrix) else HermitianMatrix.from_array(v, check_tol=1e-10)
    if h0.dim != v.dim:
        raise ValueError(f"H0 has dimension {h0.dim} but V has {v.dim}")
    h = h0.entries + v.entries
    spec_h0 = eig_hermitian(h0)[0]
    spec_h = eig_hermitian(h)[0]
    breaks = np.concatenate([spec_h0, spec_h])
    if grid is None:
        grid, gap_tol = graded_grid(breaks, scale=v.norm, gap_rel=gap_rel)
    else:
        gap_tol = gap_rel * max(float(np.ptp(breaks)), v.norm, 1e-300)
    data = boundary_from_operators(
        h,
        h0.entries,
        np.asarray(grid, dtype=float),
        schedule or EpsilonSchedule.geometric(),
        spec_h0,
        gap_tol,
        float(np.trace(v.entries).real),
        max(10.0 * (h0.norm + v.norm), 1.0),
        extra_breaks=spec_h,
        tails=False,
    )
    lhs = complex(np.trace(apply_rational(h, f) - apply_rational(h0.entries, f)))
    rhs, _ = integrate(data.xi_function().multiply(f.derivative()))
    rhs = complex(rhs)
    return lhs, rhs, float(abs(lhs - rhs))
