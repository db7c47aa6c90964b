"""Exponential, outer and Blaschke representations of the determinant.

Upper half-plane: ``det_{H/H0}(z) = exp((1/(pi i)) int ζ(λ)/(λ - z) dλ)``.

Lower half-plane: ``det_{H/H0}(z) = e^{iγ} B(z) exp(-(1/(pi i)) int ζ(λ)/(λ - z) dλ)``
where ``B`` is the Blaschke product over the eigenvalues of H in the lower
half-plane. At finite dimension ``det_{H/H*}`` is exactly such a product,
so the linear term and the singular measure vanish; :func:`verify_inner_purity`
is the numerical witness.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ssf_lab.errors import (
    PoleHitError,
    QuadratureBudgetExceededError,
    RepresentationMismatchError,
)
from ssf_lab.genint import GridFunction, integrate
from ssf_lab.linop import AccumulativePair, eig_general
from ssf_lab.pertdet import BoundaryData, pert_det, pert_det_adjoint

__all__ = [
    "BlaschkeProduct",
    "LhpRepresentation",
    "cauchy_integral",
    "cauchy_exp_rep",
    "outer_factor",
    "outer_phase",
    "blaschke_eval",
    "blaschke_condition",
    "fit_lhp_representation",
    "verify_inner_purity",
    "reflection_check",
]

LogModulus = Union[BoundaryData, GridFunction]


@dataclass(frozen=True, eq=False)
class BlaschkeProduct:
    """Finite Blaschke product with zeros in the lower half-plane.

    Each factor is ``phase_k (z - z_k)/(z - conj z_k)``; the phase makes the
    factor nonnegative at ``z = -i``.
    """

    zeros: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_zeros(cls, zeros: Sequence[complex], tol: float = 1e-12) -> "BlaschkeProduct":
        """Build the normalized product, dropping zeros on the real axis.

        :param zeros: points with Im <= 0
        :param tol: zeros with |Im| <= tol count as real and contribute 1
        """
        zeros = np.asarray(zeros, dtype=complex).ravel()
        if np.any(zeros.imag > tol):
            raise ValueError("Blaschke zeros must lie in the closed lower half-plane")
        zeros = zeros[zeros.imag < -tol]
        u = (-1j - zeros) / (-1j - zeros.conj())
        size = np.abs(u)
        phases = np.where(size > 0, np.conj(u) / np.where(size > 0, size, 1.0), 1.0 + 0j)
        return cls(zeros=zeros, phases=phases)

    def __len__(self) -> int:
        return self.zeros.size


@dataclass
class LhpRepresentation:
    """Fitted lower half-plane representation and its residuals at the test points."""

    gamma: float
    a: float
    blaschke: BlaschkeProduct
    mu_mass: float
    zeta_ref: BoundaryData
    residuals: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.a < 0 or self.mu_mass < 0:
            raise ValueError("a and mu_mass must be nonnegative")

    def __call__(self, z: complex) -> complex:
        cauchy, _ = cauchy_integral(self.zeta_ref, z)
        return complex(
            np.exp(1j * self.gamma) * blaschke_eval(self.blaschke, z) * np.exp(-cauchy)
        )


def _zeta(log_modulus: LogModulus) -> GridFunction:
    if isinstance(log_modulus, BoundaryData):
        return log_modulus.zeta_function()
    return log_modulus


def _local_spacing(grid: np.ndarray, x: float) -> float:
    k = int(np.clip(np.searchsorted(grid, x), 1, grid.size - 1))
    return float(grid[k] - grid[k - 1])


def cauchy_integral(
    data: LogModulus, z: complex, max_error: Optional[float] = None
) -> Tuple[complex, float]:
    """``(1/(pi i)) int ζ(λ)/(λ - z) dλ`` for z off the real axis.

    :param data: boundary data or a grid function of log|F|
    :param z: evaluation point
    :param max_error: absolute budget for the quadrature estimate
    :return: (value, error estimate)
    """
    f = _zeta(data)
    if abs(z.imag) < 2.0 * _local_spacing(f.grid, z.real):
        raise QuadratureBudgetExceededError(
            f"z = {z} is closer to the axis than the grid resolves"
        )
    value, estimate = integrate(f.multiply(lambda lam: 1.0 / (lam - z)), max_error=max_error)
    return complex(value) / (np.pi * 1j), estimate / np.pi


def cauchy_exp_rep(data: LogModulus, z: complex, max_error: Optional[float] = None) -> complex:
    """``exp((1/(pi i)) int ζ/(λ - z))``, equal to det_{H/H0}(z) for Im z > 0."""
    if z.imag <= 0:
        raise ValueError(f"z must lie in the upper half-plane, got {z}")
    value, _ = cauchy_integral(data, z, max_error=max_error)
    return complex(np.exp(value))


def outer_factor(log_modulus: LogModulus, z: complex) -> complex:
    """Outer function with boundary modulus ``exp(log_modulus)``.

    ``exp((1/(pi i)) int (1/(λ - z) - λ/(1 + λ²)) log|F(λ)| dλ)``
    """
    if z.imag <= 0:
        raise ValueError(f"z must lie in the upper half-plane, got {z}")
    f = _zeta(log_modulus)
    mass, _ = integrate(f.with_values(np.abs(f.values)), weight="cauchy")
    if not np.isfinite(mass):
        raise QuadratureBudgetExceededError("log|F| is not integrable against dλ/(1+λ²)")
    value, _ = integrate(f.multiply(lambda lam: (1.0 + lam * z) / (lam - z)), weight="cauchy")
    return complex(np.exp(complex(value) / (np.pi * 1j)))


def outer_phase(log_modulus: LogModulus) -> float:
    """γ with ``outer_factor = e^{iγ} exp((1/(pi i)) int log|F|/(λ - z))``.

    ``γ = (1/pi) int λ log|F(λ)| / (1 + λ²) dλ``
    """
    f = _zeta(log_modulus)
    value, _ = integrate(f.multiply(lambda lam: lam), weight="cauchy")
    return float(np.real(value)) / np.pi


def blaschke_eval(b: BlaschkeProduct, z: complex, tol: float = 1e-12) -> complex:
    """Evaluate ``prod phase_k (z - z_k)/(z - conj z_k)``."""
    if len(b) == 0:
        return 1.0 + 0j
    poles = b.zeros.conj()
    gap = np.abs(z - poles)
    if np.any(gap <= tol * np.maximum(1.0, np.abs(poles))):
        raise PoleHitError(f"z = {z} is a pole of the Blaschke product")
    return complex(np.prod(b.phases * (z - b.zeros) / (z - poles)))


def blaschke_condition(b: BlaschkeProduct) -> Tuple[float, float]:
    """``sum |Im z_k| / (1 + |z_k|²)`` vectorized and by direct summation."""
    vectorized = float(np.sum(np.abs(b.zeros.imag) / (1.0 + np.abs(b.zeros) ** 2)))
    direct = math.fsum(abs(z.imag) / (1.0 + abs(z) ** 2) for z in b.zeros)
    return vectorized, direct


def fit_lhp_representation(
    pair: AccumulativePair,
    data: BoundaryData,
    points: Sequence[complex],
    tol: float = 1e-3,
) -> LhpRepresentation:
    """Fit γ (with a = 0 and μ = 0) and check the representation at each point.

    γ is matched at the point with the largest |Im z|.

    :raises RepresentationMismatchError: when a point misses by more than ``tol``
    """
    points = [complex(z) for z in points]
    if not points or any(z.imag >= 0 for z in points):
        raise ValueError("Test points must be a nonempty list in the lower half-plane")
    spectrum = eig_general(pair)
    blaschke = BlaschkeProduct.from_zeros(spectrum.lower)
    mirror = np.concatenate([spectrum.eigenvalues, spectrum.eigenvalues.conj()])
    direct, model = [], []
    for z in points:
        if np.min(np.abs(mirror - z)) < 1e-6:
            raise ValueError(f"Test point {z} is too close to spec(H) or its mirror")
        cauchy, _ = cauchy_integral(data, z)
        direct.append(pert_det(pair, z).value)
        model.append(blaschke_eval(blaschke, z) * np.exp(-cauchy))
    anchor = int(np.argmax([abs(z.imag) for z in points]))
    gamma = float(np.angle(direct[anchor] / model[anchor]))
    residuals = [
        float(abs(d - np.exp(1j * gamma) * m) / abs(d)) for d, m in zip(direct, model)
    ]
    worst = max(residuals)
    logger.debug(f"Lower half-plane fit: gamma = {gamma:.3e}, worst residual {worst:.2e}")
    if worst > tol:
        k = residuals.index(worst)
        raise RepresentationMismatchError(
            f"Representation misses det at z = {points[k]} by {worst:.3e} (tolerance {tol})"
        )
    return LhpRepresentation(
        gamma=gamma, a=0.0, blaschke=blaschke, mu_mass=0.0, zeta_ref=data, residuals=residuals
    )


def verify_inner_purity(pair: AccumulativePair, grid: Sequence[float]) -> float:
    """``max |log |det_{H/H*}(λ)||`` over a real grid (zero for a pure Blaschke inner part)."""
    return float(
        max((abs(pert_det_adjoint(pair, complex(lam)).log_value.real) for lam in grid), default=0.0)
    )


def reflection_check(
    pair: AccumulativePair, data: BoundaryData, points: Sequence[complex]
) -> float:
    """Largest relative residual of ``exp(-(1/(pi i)) int ζ/(λ - z)) = conj det(conj z)``."""
    worst = 0.0
    for z in points:
        z = complex(z)
        if z.imag >= 0:
            raise ValueError(f"Test point {z} is not in the lower half-plane")
        cauchy, _ = cauchy_integral(data, z)
        target = np.conj(pert_det(pair, z.conjugate()).value)
        worst = max(worst, float(abs(np.exp(-cauchy) - target) / abs(target)))
    return worst
