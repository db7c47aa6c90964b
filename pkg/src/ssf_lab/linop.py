"""Dense complex linear algebra for the lab.

Resolvents, log-determinants split into modulus and raw argument, Hermitian
and general eigensolvers, and rational functions of matrices by partial
fractions. Everything here is a pure function of its inputs; matrices are
stored as read-only numpy arrays.

Example:
    >>> import numpy as np
    >>> from ssf_lab.linop import AccumulativePair, eig_general
    >>> pair = AccumulativePair.from_arrays(np.zeros((1, 1)), np.eye(1))
    >>> eig_general(pair).eigenvalues
    array([0.-1.j])
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from ssf_lab.errors import (
    ConvergenceFailureError,
    DimensionError,
    NotHermitianError,
    PoleNearSpectrumError,
    SingularMatrixError,
    SingularShiftError,
    SpectrumConfinementError,
)

if TYPE_CHECKING:
    from ssf_lab.traceform import RationalFunction

__all__ = [
    "MAX_DIM",
    "TOL_RES",
    "TOL_PSD",
    "as_matrix",
    "HermitianMatrix",
    "PsdMatrix",
    "AccumulativePair",
    "Spectrum",
    "resolvent",
    "log_det",
    "log_det_batch",
    "eig_hermitian",
    "eig_general",
    "apply_rational",
]

MAX_DIM = 64
TOL_RES = 1e-8
TOL_PSD = 1e-12
# Pivot threshold relative to the matrix scale for log_det.
TOL_PIVOT = 1e-14


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(m, max_dim: int = MAX_DIM) -> np.ndarray:
    """Validate and return a square, finite complex matrix.

    :param m: array-like input
    :param max_dim: dimension cap for dense algorithms
    :return: complex ndarray of shape (n, n)
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValueError("Empty matrix")
    if a.shape[0] > max_dim:
        raise DimensionError(f"Dimension {a.shape[0]} exceeds the cap of {max_dim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("Matrix has non-finite entries")
    return a


def _scale(m: np.ndarray) -> float:
    return max(float(np.linalg.norm(m, 2)), 1.0)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A Hermitian matrix, symmetrized on construction.

    :param entries: complex array with entries[i, j] == conj(entries[j, i])
    """

    entries: np.ndarray

    @classmethod
    def from_array(cls, m, check_tol: Optional[float] = None) -> "HermitianMatrix":
        """Build from an array, optionally rejecting inputs far from Hermitian.

        :param m: square array-like
        :param check_tol: if given, raise when ``||m - m^H|| > check_tol * ||m||``
        """
        a = as_matrix(m)
        if check_tol is not None:
            asym = np.linalg.norm(a - a.conj().T)
            if asym > check_tol * max(np.linalg.norm(a), 1.0):
                raise NotHermitianError(f"Matrix is not Hermitian (asymmetry {asym:.3e})")
        return cls(_frozen(0.5 * (a + a.conj().T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))


@dataclass(frozen=True, eq=False)
class PsdMatrix:
    """A positive semidefinite matrix with its spectral decomposition.

    Eigenvalues are sorted in descending order; round-off negatives below
    ``tol_psd * ||V||`` are clamped to zero and the matrix is rebuilt from
    the clamped decomposition.
    """

    underlying: HermitianMatrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_array(
        cls, m, tol_psd: float = TOL_PSD, check_tol: Optional[float] = None
    ) -> "PsdMatrix":
        """Build from an array, clamping round-off and rejecting indefinite input.

        :param m: square array-like, expected Hermitian and PSD
        :param tol_psd: relative clamping tolerance
        :param check_tol: forwarded to the Hermitian check
        """
        herm = HermitianMatrix.from_array(m, check_tol=check_tol)
        values, vectors = eig_hermitian(herm)
        values = values[::-1]
        vectors = vectors[:, ::-1]
        threshold = tol_psd * max(float(np.max(np.abs(values))), 0.0)
        if np.any(values < -max(threshold, 1e-300)):
            raise NotHermitianError(
                f"Matrix is not positive semidefinite (smallest eigenvalue {values[-1]:.3e})"
            )
        values = np.where(values < threshold, 0.0, values)
        rebuilt = (vectors * values) @ vectors.conj().T
        return cls(
            underlying=HermitianMatrix(_frozen(0.5 * (rebuilt + rebuilt.conj().T))),
            eigenvalues=np.array(values, dtype=float),
            eigenvectors=_frozen(vectors),
        )

    @property
    def entries(self) -> np.ndarray:
        return self.underlying.entries

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))


@dataclass(frozen=True, eq=False)
class AccumulativePair:
    """The pair (H0, V) defining the accumulative operator H = H0 - iV.

    :param h0: self-adjoint unperturbed operator
    :param v: nonnegative perturbation
    """

    h0: HermitianMatrix
    v: PsdMatrix
    dim: int = field(init=False)

    def __post_init__(self):
        if self.h0.dim != self.v.underlying.dim:
            raise DimensionError(
                f"H0 has dimension {self.h0.dim} but V has {self.v.underlying.dim}"
            )
        object.__setattr__(self, "dim", self.h0.dim)
        self._spot_check()

    @classmethod
    def from_arrays(
        cls, h0, v, tol_psd: float = TOL_PSD, check_tol: Optional[float] = None
    ) -> "AccumulativePair":
        """Build a pair from raw arrays.

        :param h0: Hermitian array-like
        :param v: PSD array-like
        :param tol_psd: clamping tolerance for V
        :param check_tol: reject inputs whose Hermitian defect exceeds this
        """
        return cls(
            h0=HermitianMatrix.from_array(h0, check_tol=check_tol),
            v=PsdMatrix.from_array(v, tol_psd=tol_psd, check_tol=check_tol),
        )

    def _spot_check(self, samples: int = 8):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(self.dim, samples)) + 1j * rng.normal(size=(self.dim, samples))
        x /= np.linalg.norm(x, axis=0)
        quad = np.einsum("is,ij,js->s", x.conj(), self.h, x)
        tol = 1e-12 * max(self.norm_h0 + self.norm_v, 1.0)
        if np.any(quad.imag > tol):
            raise NotHermitianError("H = H0 - iV is not accumulative")

    @property
    def h(self) -> np.ndarray:
        """H = H0 - iV."""
        return self.h0.entries - 1j * self.v.entries

    @property
    def h_adjoint(self) -> np.ndarray:
        """H* = H0 + iV."""
        return self.h0.entries + 1j * self.v.entries

    @property
    def norm_h0(self) -> float:
        return self.h0.norm

    @property
    def norm_v(self) -> float:
        return float(self.v.eigenvalues[0]) if self.dim else 0.0

    @property
    def trace_v(self) -> float:
        return self.v.trace

    def truncated(self, k: int) -> "AccumulativePair":
        """Pair whose perturbation keeps the k largest spectral components of V."""
        vals = np.where(np.arange(self.dim) < k, self.v.eigenvalues, 0.0)
        vecs = self.v.eigenvectors
        return AccumulativePair(
            h0=self.h0,
            v=PsdMatrix(
                underlying=HermitianMatrix(_frozen((vecs * vals) @ vecs.conj().T)),
                eigenvalues=vals,
                eigenvectors=vecs,
            ),
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of H tagged as lying in the lower half-plane or on the axis."""

    eigenvalues: np.ndarray
    kinds: Tuple[str, ...]

    @property
    def lower(self) -> np.ndarray:
        """Eigenvalues strictly in the lower half-plane."""
        mask = np.array([k == "lower-half" for k in self.kinds], dtype=bool)
        return self.eigenvalues[mask]

    @property
    def real(self) -> np.ndarray:
        mask = np.array([k == "real" for k in self.kinds], dtype=bool)
        return self.eigenvalues[mask].real


def resolvent(m, z: complex, tol_res: float = TOL_RES) -> np.ndarray:
    """Return (M - zI)^-1 by pivoted LU.

    :param m: square matrix
    :param z: shift
    :param tol_res: relative pivot threshold signalling z near the spectrum
    :return: the resolvent matrix
    """
    a = as_matrix(m)
    shifted = a - z * np.eye(a.shape[0])
    lu, piv = scipy.linalg.lu_factor(shifted, check_finite=False)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest <= tol_res * _scale(a):
        raise SingularShiftError(
            f"z = {z} is within {smallest:.3e} of the spectrum (pivot below threshold)"
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex))


def log_det(m, tol: float = TOL_PIVOT) -> Tuple[float, float]:
    """Log-modulus and raw argument of det(M) from its LU factors.

    The argument is the sum of per-pivot principal arguments plus pi for an
    odd row permutation; it is not continuous across calls.

    :param m: square matrix
    :param tol: relative pivot threshold
    :return: (log_modulus, argument)
    """
    a = as_matrix(m)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.diag(lu)
    if np.min(np.abs(diag)) <= tol * max(float(np.abs(a).max()), 1e-300):
        raise SingularMatrixError("Matrix is singular to working precision")
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    log_modulus = float(np.sum(np.log(np.abs(diag))))
    argument = float(np.sum(np.angle(diag))) + (np.pi if swaps % 2 else 0.0)
    return log_modulus, argument


def log_det_batch(stack: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized log_det over a stack of matrices of shape (k, n, n).

    :return: (log_modulus, principal argument) arrays of length k
    """
    sign, logabs = np.linalg.slogdet(np.asarray(stack, dtype=complex))
    if np.any(~np.isfinite(logabs)) or np.any(sign == 0):
        raise SingularMatrixError("A matrix in the batch is singular")
    return logabs, np.angle(sign)


def eig_hermitian(h) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and a unitary eigenbasis of a Hermitian matrix.

    :param h: :class:`HermitianMatrix` or a Hermitian array
    """
    entries = h.entries if isinstance(h, HermitianMatrix) else as_matrix(h)
    try:
        values, vectors = scipy.linalg.eigh(entries, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailureError(f"eigh did not converge: {e}") from e
    return values, vectors


def eig_general(pair: AccumulativePair, tol_imag: float = 1e-10) -> Spectrum:
    """Eigenvalues of H = H0 - iV, tagged real when |Im| <= tol_imag * ||H||.

    :param pair: the accumulative pair
    :param tol_imag: relative tolerance for the real tag
    :raises SpectrumConfinementError: an eigenvalue has Im above the tolerance
    """
    h = pair.h
    try:
        values = scipy.linalg.eigvals(h, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailureError(f"eig did not converge: {e}") from e
    tol = tol_imag * _scale(h)
    kinds: List[str] = []
    for value in values:
        if abs(value.imag) <= tol:
            kinds.append("real")
        elif value.imag < 0:
            kinds.append("lower-half")
        else:
            raise SpectrumConfinementError(
                f"Eigenvalue {value} lies above the real axis (tolerance {tol:.1e})"
            )
    order = np.lexsort((values.imag, values.real))
    return Spectrum(eigenvalues=values[order], kinds=tuple(kinds[i] for i in order))


def apply_rational(m, f: "RationalFunction", tol_res: float = TOL_RES) -> np.ndarray:
    """Evaluate f(M) = sum_j c_j (M - z_j I)^(-p_j).

    :param m: square matrix
    :param f: rational function with poles off the spectrum of m
    :param tol_res: relative proximity threshold between poles and spectrum
    """
    a = as_matrix(m)
    spectrum = scipy.linalg.eigvals(a, check_finite=False)
    scale = _scale(a)
    result = np.zeros_like(a)
    for term in f.terms:
        gap = float(np.min(np.abs(spectrum - term.pole)))
        if gap <= tol_res * scale:
            raise PoleNearSpectrumError(
                f"Pole {term.pole} is within {gap:.3e} of the spectrum"
            )
        try:
            r = resolvent(a, term.pole, tol_res=tol_res)
        except SingularShiftError as e:
            raise PoleNearSpectrumError(str(e)) from e
        result = result + term.coeff * np.linalg.matrix_power(r, term.order)
    return result
