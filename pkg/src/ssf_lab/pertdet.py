"""Perturbation determinants and their boundary values.

``det_{H/H0}(z) = det(I - iV (H0 - z)^-1) = det(H - z) / det(H0 - z)`` for the
accumulative operator ``H = H0 - iV``. Boundary values on the real axis are
obtained by tracking a continuous branch of ``log det`` along horizontal lines
``Im z = eps`` from a far anchor ``iY`` and extrapolating to ``eps = 0``:

- ``zeta = Re log det(λ + i0)`` (nonnegative, integral ``pi tr V``),
- ``xi = (1/pi) Im log det(λ + i0)`` (the spectral shift function).
"""

import concurrent.futures as futures
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from ssf_lab.errors import (
    BranchStepTooLargeError,
    ConvergenceFailureError,
    ExtrapolationDivergedError,
    GridTooCloseError,
    SingularMatrixError,
    SingularShiftError,
)
from ssf_lab.genint import GridFunction, PowerTail, a_integral, integrate
from ssf_lab.linop import (
    TOL_RES,
    AccumulativePair,
    as_matrix,
    eig_hermitian,
    log_det,
    log_det_batch,
    resolvent,
)

__all__ = [
    "DetValue",
    "EpsilonSchedule",
    "BoundaryData",
    "SweepResult",
    "pert_det",
    "pert_det_adjoint",
    "det_ratio",
    "log_det_path",
    "graded_grid",
    "default_grid",
    "boundary_from_operators",
    "boundary_values",
    "zeta_norm",
    "asymptotic_check",
    "xi_bounds",
    "finite_rank_sweep",
    "boundary_relation",
    "limit_representation_check",
]

# Largest disagreement between the eigenvalue-predicted argument and the
# determinant before a branch is called ambiguous.
MAX_ARG_MISMATCH = np.pi / 4
ANCHOR_SEGMENT_POINTS = 64
_CHUNK = 512


@dataclass(frozen=True)
class DetValue:
    """A determinant value with a branch of its logarithm."""

    z: complex
    value: complex
    log_value: complex


@dataclass(frozen=True)
class EpsilonSchedule:
    """Geometric sequence of distances from the real axis.

    :param values: decreasing positive eps values with constant ratio
    :param extrapolation_order: polynomial degree used to extrapolate to 0
    """

    values: Tuple[float, ...]
    extrapolation_order: int = 2

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 3:
            raise ValueError("An epsilon schedule needs at least three values")
        if any(v <= 0 for v in values) or any(b >= a for a, b in zip(values, values[1:])):
            raise ValueError("Epsilon values must be positive and strictly decreasing")
        ratios = np.array(values[1:]) / np.array(values[:-1])
        if not np.allclose(ratios, ratios[0], rtol=1e-6):
            raise ValueError("Epsilon values must be geometric")
        if not 1 <= self.extrapolation_order <= len(values) - 2:
            raise ValueError(
                f"Extrapolation order must be between 1 and {len(values) - 2}"
            )

    @classmethod
    def geometric(
        cls,
        start: float = 1e-2,
        stop: float = 1e-5,
        ratio: float = 10.0**-0.5,
        order: int = 2,
    ) -> "EpsilonSchedule":
        """Schedule ``start, start*ratio, ...`` down to ``stop``."""
        count = int(round(np.log(stop / start) / np.log(ratio))) + 1
        return cls(tuple(start * ratio ** np.arange(count)), order)

    @property
    def ratio(self) -> float:
        return self.values[1] / self.values[0]


@dataclass(eq=False)
class BoundaryData:
    """Boundary values ``zeta`` and ``xi`` on a real grid.

    :param grid: strictly increasing λ values avoiding ``spec_h0`` by ``gap_tol``
    :param zeta: ``Re log det(λ + i0)``
    :param xi: ``(1/pi) Im log det(λ + i0)``
    :param spec_h0: eigenvalues of H0 (break points)
    :param tail_coeffs: (c_zeta, c_xi) of ``zeta ~ c_zeta/λ²``, ``xi ~ c_xi/λ``
    :param err_zeta: extrapolation error estimate per point
    :param err_xi: extrapolation error estimate per point
    """

    grid: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    spec_h0: np.ndarray
    tail_coeffs: Tuple[float, float]
    err_zeta: np.ndarray
    err_xi: np.ndarray
    trace_v: float = 0.0
    gap_tol: float = 0.0
    schedule: Tuple[float, ...] = ()
    extra_breaks: Tuple[float, ...] = ()
    zeta_tails: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    xi_tails: Dict[str, Tuple[float, ...]] = field(default_factory=dict)

    @property
    def breaks(self) -> Tuple[float, ...]:
        points = np.concatenate([np.asarray(self.spec_h0, float), np.asarray(self.extra_breaks, float)])
        inside = points[(points > self.grid[0]) & (points < self.grid[-1])]
        return tuple(np.unique(inside))

    def _tail(self, tails: Dict[str, Tuple[float, ...]], side: str, exponent: int):
        coeffs = tails.get(side)
        if not coeffs:
            return None
        return PowerTail(exponent, tuple(coeffs))

    def zeta_function(self) -> GridFunction:
        """ζ with its ``λ^-2`` tail models."""
        return GridFunction(
            self.grid,
            self.zeta,
            left_tail=self._tail(self.zeta_tails, "left", -2),
            right_tail=self._tail(self.zeta_tails, "right", -2),
            breaks=self.breaks,
        )

    def xi_function(self) -> GridFunction:
        """ξ with its ``λ^-1`` tail models."""
        return GridFunction(
            self.grid,
            self.xi,
            left_tail=self._tail(self.xi_tails, "left", -1),
            right_tail=self._tail(self.xi_tails, "right", -1),
            breaks=self.breaks,
        )

    def to_dict(self) -> Dict:
        return {
            "grid": self.grid.tolist(),
            "zeta": self.zeta.tolist(),
            "xi": self.xi.tolist(),
            "spec_h0": np.asarray(self.spec_h0, float).tolist(),
            "tail_coeffs": [float(c) for c in self.tail_coeffs],
            "err_zeta": self.err_zeta.tolist(),
            "err_xi": self.err_xi.tolist(),
            "trace_v": float(self.trace_v),
            "gap_tol": float(self.gap_tol),
            "schedule": list(self.schedule),
            "extra_breaks": list(self.extra_breaks),
            "zeta_tails": {k: list(v) for k, v in self.zeta_tails.items()},
            "xi_tails": {k: list(v) for k, v in self.xi_tails.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BoundaryData":
        return cls(
            grid=np.asarray(data["grid"], float),
            zeta=np.asarray(data["zeta"], float),
            xi=np.asarray(data["xi"], float),
            spec_h0=np.asarray(data["spec_h0"], float),
            tail_coeffs=tuple(data["tail_coeffs"]),
            err_zeta=np.asarray(data["err_zeta"], float),
            err_xi=np.asarray(data["err_xi"], float),
            trace_v=float(data.get("trace_v", 0.0)),
            gap_tol=float(data.get("gap_tol", 0.0)),
            schedule=tuple(data.get("schedule", ())),
            extra_breaks=tuple(data.get("extra_breaks", ())),
            zeta_tails={k: tuple(v) for k, v in data.get("zeta_tails", {}).items()},
            xi_tails={k: tuple(v) for k, v in data.get("xi_tails", {}).items()},
        )


@dataclass
class SweepResult:
    """A finite-rank chain H_1, ..., H_n with boundary data and checks."""

    pairs: List[AccumulativePair]
    data: List[BoundaryData]
    xi_max: List[float]
    bounds_hold: bool
    product_residual: float


# ---------------------------------------------------------------------------
# Determinants
# ---------------------------------------------------------------------------


def _principal(log_value: complex) -> complex:
    return complex(log_value.real, float(np.angle(np.exp(1j * log_value.imag))))


def _log_ratio(a: np.ndarray, b: np.ndarray, z: complex) -> complex:
    """``log det(A - z) - log det(B - z)`` with raw (non-continuous) argument."""
    eye = np.eye(a.shape[0])
    try:
        mod_a, arg_a = log_det(a - z * eye)
        mod_b, arg_b = log_det(b - z * eye)
    except SingularMatrixError as e:
        raise SingularShiftError(f"z = {z} is too close to the spectrum") from e
    return complex(mod_a - mod_b, arg_a - arg_b)


def _log_ratio_batch(a: np.ndarray, b: np.ndarray, zs: np.ndarray) -> np.ndarray:
    eye = np.eye(a.shape[0])
    out = np.empty(zs.size, dtype=complex)
    for start in range(0, zs.size, _CHUNK):
        chunk = zs[start : start + _CHUNK, None, None]
        try:
            mod_a, arg_a = log_det_batch(a[None] - chunk * eye)
            mod_b, arg_b = log_det_batch(b[None] - chunk * eye)
        except SingularMatrixError as e:
            raise SingularShiftError("A path point is too close to the spectrum") from e
        out[start : start + _CHUNK] = (mod_a - mod_b) + 1j * (arg_a - arg_b)
    return out


def pert_det(pair: AccumulativePair, z: complex, tol_res: float = TOL_RES) -> DetValue:
    """``det(I - iV (H0 - z)^-1)`` at a single point.

    :param pair: the accumulative pair
    :param z: a point off spec(H0) and spec(H)
    :param tol_res: proximity threshold forwarded to the resolvent
    :return: value with the principal logarithm
    """
    r0 = resolvent(pair.h0.entries, z, tol_res=tol_res)
    m = np.eye(pair.dim) - 1j * pair.v.entries @ r0
    try:
        modulus, argument = log_det(m)
    except SingularMatrixError as e:
        raise SingularShiftError(f"z = {z} is an eigenvalue of H") from e
    log_value = _principal(complex(modulus, argument))
    value = np.exp(log_value)
    check = np.exp(_log_ratio(pair.h, pair.h0.entries, z))
    if abs(check - value) > 1e-9 * max(abs(value), 1.0):
        logger.warning(
            f"det at z={z}: resolvent form {value} and ratio form {check} disagree"
        )
    return DetValue(z=complex(z), value=complex(value), log_value=log_value)


def pert_det_adjoint(pair: AccumulativePair, z: complex) -> DetValue:
    """``det(H - z) / det(H* - z)``; contractive in the lower half-plane."""
    log_value = _principal(_log_ratio(pair.h, pair.h_adjoint, z))
    return DetValue(z=complex(z), value=complex(np.exp(log_value)), log_value=log_value)


def det_ratio(a, b, z: complex) -> complex:
    """``det(A - z) / det(B - z)`` for arbitrary square matrices of one size."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"Shapes {a.shape} and {b.shape} differ")
    return complex(np.exp(_log_ratio(a, b, z)))


# ---------------------------------------------------------------------------
# Branch tracking
# ---------------------------------------------------------------------------


def _swept_angle(eigs: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Per step, ``sum_k Arg((e_k - z_{j+1}) / (e_k - z_j))``.

    Exact change of ``Im sum_k log(e_k - z)`` along each straight step that
    misses every ``e_k``; a step subtends less than pi at each eigenvalue.
    """
    steps = path.size - 1
    out = np.zeros(steps)
    if eigs.size == 0:
        return out
    for start in range(0, steps, _CHUNK):
        stop = min(start + _CHUNK, steps)
        z0 = path[start:stop, None]
        z1 = path[start + 1 : stop + 1, None]
        out[start:stop] = np.sum(
            np.angle((eigs[None, :] - z1) / (eigs[None, :] - z0)), axis=1
        )
    return out


def _track(a: np.ndarray, b: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Continuous branch of ``log det(A - z) - log det(B - z)`` along ``path``.

    The argument gained on each step is read off the eigenvalues of A and B,
    which fixes the multiple of 2 pi for the determinant value at every point
    however far apart the points are.
    """
    raw = _log_ratio_batch(a, b, path)
    start = _principal(raw[0])
    if path.size == 1:
        return np.array([start])
    try:
        eigs_a = scipy.linalg.eigvals(a, check_finite=False)
        eigs_b = scipy.linalg.eigvals(b, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailureError(f"eig did not converge: {e}") from e
    swept = _swept_angle(eigs_a, path) - _swept_angle(eigs_b, path)
    predicted = start.imag + np.concatenate([[0.0], np.cumsum(swept)])
    turns = np.round((predicted - raw.imag) / (2 * np.pi))
    argument = raw.imag + 2 * np.pi * turns
    miss = np.abs(argument - predicted)
    if np.any(miss > MAX_ARG_MISMATCH):
        k = int(np.argmax(miss))
        raise BranchStepTooLargeError(
            f"Branch of log det at z = {path[k]} is ambiguous: eigenvalue count and "
            f"determinant disagree by {miss[k]:.3f} (path too close to the spectrum)"
        )
    return raw.real + 1j * argument


def log_det_path(pair: AccumulativePair, path: Sequence[complex]) -> List[DetValue]:
    """Branch-continuous ``log det_{H/H0}`` along a path.

    The first point takes the principal branch; start far up the imaginary
    axis (``iY`` with ``Y >= 10 (||H0|| + ||V||)``) where det is close to 1.
    Consecutive points are joined by straight steps, which may be long.

    :param pair: the accumulative pair
    :param path: sequence of points avoiding both spectra
    :raises BranchStepTooLargeError: a point sits too close to either spectrum
        for the branch to be fixed
    """
    zs = np.asarray(path, dtype=complex).ravel()
    if zs.size == 0:
        return []
    logs = _track(pair.h, pair.h0.entries, zs)
    return [
        DetValue(z=complex(z), value=complex(np.exp(lv)), log_value=complex(lv))
        for z, lv in zip(zs, logs)
    ]


def _anchor_height(h0_norm: float, v_norm: float) -> float:
    return max(10.0 * (h0_norm + v_norm), 1.0)


# ---------------------------------------------------------------------------
# Grids and boundary values
# ---------------------------------------------------------------------------


def _spread(points: np.ndarray, v_norm: float) -> float:
    width = float(points.max() - points.min()) if points.size else 0.0
    spread = max(width, v_norm)
    return spread if spread > 0 else 1.0


def graded_grid(
    breaks: Sequence[float],
    scale: float = 0.0,
    half_width: float = 50.0,
    points: int = 4000,
    refine_levels: int = 8,
    gap_rel: float = 1e-3,
) -> Tuple[np.ndarray, float]:
    """Symmetric grid refined geometrically toward each break point.

    Around each break, points sit at distances ``g q^m`` (``q = 1 + 1/32``)
    from ``g = gap_rel * spread`` out to ``g 2^refine_levels``; base points
    inside that radius are dropped, and nothing lies within ``g`` of a break.
    The spread is the width of the break set or ``scale``, whichever is larger.

    :param breaks: points to refine toward and exclude
    :param scale: perturbation norm entering the spread
    :return: (grid, gap_tol)
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    reach = half_width
    if breaks.size:
        reach = max(half_width, 10.0 * float(np.max(np.abs(breaks))))
    gap_tol = gap_rel * _spread(breaks, scale)
    radius = gap_tol * 2.0**refine_levels
    base = np.linspace(-reach, reach, points)
    if breaks.size:
        base = base[np.min(np.abs(base[:, None] - breaks[None, :]), axis=1) > radius]
    ratio = 1.0 + 1.0 / 32.0
    count = int(np.ceil(refine_levels * np.log(2.0) / np.log(ratio)))
    steps = gap_tol * ratio ** np.arange(1, count + 1)
    pieces = [base]
    for b in breaks:
        pieces.extend([b - steps, b + steps])
    grid = np.unique(np.concatenate(pieces))
    grid = grid[(grid >= -reach) & (grid <= reach)]
    if breaks.size:
        grid = grid[np.min(np.abs(grid[:, None] - breaks[None, :]), axis=1) > gap_tol]
    logger.debug(f"Grid: {grid.size} points on [{-reach}, {reach}], gap {gap_tol:.2e}")
    return grid, float(gap_tol)


def default_grid(
    pair: AccumulativePair,
    half_width: float = 50.0,
    points: int = 4000,
    refine_levels: int = 8,
    gap_rel: float = 1e-3,
    extra_breaks: Sequence[float] = (),
) -> Tuple[np.ndarray, float]:
    """:func:`graded_grid` around the eigenvalues of H0 (plus ``extra_breaks``)."""
    spec = eig_hermitian(pair.h0)[0]
    breaks = np.concatenate([spec, np.asarray(extra_breaks, dtype=float)])
    return graded_grid(
        breaks,
        scale=pair.norm_v,
        half_width=half_width,
        points=points,
        refine_levels=refine_levels,
        gap_rel=gap_rel,
    )


def _neville_at_zero(eps: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Value at eps = 0 of the interpolating polynomial through (eps, values) rows."""
    p = [values[i].copy() for i in range(eps.size)]
    n = eps.size
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = (eps[j] * p[i] - eps[i] * p[i + 1]) / (eps[j] - eps[i])
    return p[0]


def _extrapolate(eps: np.ndarray, lines: np.ndarray, order: int):
    """Extrapolate rows of ``lines`` (one per eps) to eps = 0.

    :return: (limit, error estimate, previous-window error estimate)
    """
    top = _neville_at_zero(eps[-(order + 1) :], lines[-(order + 1) :])
    lower = _neville_at_zero(eps[-order:], lines[-order:])
    estimate = np.abs(top - lower)
    prev_top = _neville_at_zero(eps[-(order + 2) : -1], lines[-(order + 2) : -1])
    prev_lower = _neville_at_zero(eps[-(order + 1) : -1], lines[-(order + 1) : -1])
    return top, estimate, np.abs(prev_top - prev_lower)


def _fit_tail(lam: np.ndarray, values: np.ndarray, powers: Sequence[int], fixed=None):
    """Least-squares coefficients of ``sum c_j λ^p_j`` (+ a fixed leading term)."""
    target = values if fixed is None else values - fixed[0] * lam ** fixed[1]
    basis = np.stack([lam**p for p in powers], axis=1)
    coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return [float(c) for c in coeffs]


def _tails(grid, zeta, xi, trace_v):
    """Tail models from the outer two octaves on each side."""
    zeta_tails, xi_tails = {}, {}
    c_xi = trace_v / np.pi
    c_zeta = []
    for side, mask_fn in (
        ("left", lambda g: (g < 0) & (np.abs(g) >= abs(grid[0]) / 4)),
        ("right", lambda g: (g > 0) & (np.abs(g) >= abs(grid[-1]) / 4)),
    ):
        if (side == "left" and grid[0] >= 0) or (side == "right" and grid[-1] <= 0):
            continue
        mask = mask_fn(grid)
        if np.count_nonzero(mask) < 4:
            continue
        lam = grid[mask]
        cz = _fit_tail(lam, zeta[mask], (-2, -3, -4))
        cx = _fit_tail(lam, xi[mask], (-2, -3), fixed=(c_xi, -1))
        zeta_tails[side] = tuple(cz)
        xi_tails[side] = (float(c_xi), *cx)
        c_zeta.append(cz[0])
    return zeta_tails, xi_tails, (float(np.mean(c_zeta)) if c_zeta else 0.0, float(c_xi))


def boundary_from_operators(
    h: np.ndarray,
    h0: np.ndarray,
    grid: np.ndarray,
    schedule: EpsilonSchedule,
    spec_h0: np.ndarray,
    gap_tol: float,
    trace_v: float,
    anchor: float,
    extra_breaks: Sequence[float] = (),
    threads: int = 1,
    tails: bool = True,
) -> BoundaryData:
    """Boundary values of ``log det(H - z) - log det(H0 - z)`` for any H.

    Shared by the accumulative case and the self-adjoint baseline.

    :param anchor: height Y of the starting point iY
    :param extra_breaks: further exclusion points (eigenvalues of a self-adjoint H)
    :param tails: fit the ``λ^-2`` / ``λ^-1`` tail models
    """
    breaks = np.concatenate([spec_h0, np.asarray(extra_breaks, dtype=float)])
    if breaks.size:
        closest = np.min(np.abs(grid[:, None] - breaks[None, :]))
        if closest <= gap_tol:
            raise GridTooCloseError(
                f"Grid point within {closest:.3e} of the spectrum (gap {gap_tol:.3e})"
            )
    eps = np.asarray(schedule.values)
    t = np.linspace(0.0, 1.0, ANCHOR_SEGMENT_POINTS + 2)[:-1]

    def line(e):
        start = 1j * anchor
        stop = grid[0] + 1j * e
        path = np.concatenate([start + t * (stop - start), grid + 1j * e])
        return _track(h, h0, path)[-grid.size :]

    workers = max(int(threads), 1)
    if workers > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as executor:
            lines = np.array(list(executor.map(line, eps)))
    else:
        lines = np.array([line(e) for e in eps])

    limit, estimate, previous = _extrapolate(eps, lines, schedule.extrapolation_order)
    scale = 1e-6 * (1.0 + np.abs(limit))
    bad = (estimate > previous) & (estimate > scale)
    if np.any(bad):
        k = int(np.argmax(np.where(bad, estimate, 0.0)))
        raise ExtrapolationDivergedError(
            f"Extrapolation estimates grow at λ = {grid[k]:.6g} "
            f"({previous[k]:.3e} -> {estimate[k]:.3e})"
        )
    zeta = limit.real
    xi = limit.imag / np.pi
    err_zeta = np.abs(estimate.real)
    err_xi = np.abs(estimate.imag) / np.pi
    if tails:
        zeta_tails, xi_tails, coeffs = _tails(grid, zeta, xi, trace_v)
    else:
        zeta_tails, xi_tails, coeffs = {}, {}, (0.0, 0.0)
    logger.debug(
        f"Boundary values on {grid.size} points, max extrapolation error "
        f"{float(np.max(np.abs(estimate))):.2e}"
    )
    return BoundaryData(
        grid=grid,
        zeta=zeta,
        xi=xi,
        spec_h0=np.asarray(spec_h0, dtype=float),
        tail_coeffs=coeffs,
        err_zeta=err_zeta,
        err_xi=err_xi,
        trace_v=float(trace_v),
        gap_tol=float(gap_tol),
        schedule=tuple(schedule.values),
        extra_breaks=tuple(float(b) for b in extra_breaks),
        zeta_tails=zeta_tails,
        xi_tails=xi_tails,
    )


def boundary_values(
    pair: AccumulativePair,
    grid: Optional[np.ndarray] = None,
    schedule: Optional[EpsilonSchedule] = None,
    gap_rel: float = 1e-3,
    threads: int = 1,
) -> BoundaryData:
    """Extract ζ and ξ on a real grid.

    Each line ``Im z = eps`` is tracked from ``iY`` through a straight segment
    to the first grid point and then along the grid; the per-line logarithms
    are extrapolated to ``eps = 0`` by Neville interpolation on the last
    ``order + 1`` schedule values.

    :param pair: the accumulative pair
    :param grid: λ values, default :func:`default_grid`
    :param schedule: eps values, default 1e-2 down to 1e-5
    :param gap_rel: exclusion radius relative to the spectral spread
    :param threads: worker threads for the independent eps lines
    """
    schedule = schedule or EpsilonSchedule.geometric()
    spec_h0 = eig_hermitian(pair.h0)[0]
    if grid is None:
        grid, gap_tol = default_grid(pair, gap_rel=gap_rel)
    else:
        grid = np.asarray(grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise ValueError("Grid must be strictly increasing")
        gap_tol = gap_rel * _spread(spec_h0, pair.norm_v)
    return boundary_from_operators(
        pair.h,
        pair.h0.entries,
        grid,
        schedule,
        spec_h0,
        gap_tol,
        pair.trace_v,
        _anchor_height(pair.norm_h0, pair.norm_v),
        threads=threads,
    )


def zeta_norm(data: BoundaryData, max_error: Optional[float] = None) -> Tuple[float, float]:
    """``int ζ dλ`` over the line (expected ``pi tr V``).

    :return: (value, error estimate)
    """
    value, estimate = integrate(data.zeta_function(), max_error=max_error)
    return float(np.real(value)), estimate


def asymptotic_check(
    pair: AccumulativePair, y_values: Sequence[float]
) -> List[Tuple[float, float, float]]:
    """Compare ``Re det(iy) - 1`` with ``tr V / y`` for large y."""
    floor = 2.0 * (pair.norm_h0 + pair.norm_v)
    rows = []
    for y in y_values:
        if y < floor:
            raise ValueError(f"y = {y} is below 2(||H0|| + ||V||) = {floor:.3g}")
        measured = pert_det(pair, 1j * y).value.real - 1.0
        rows.append((float(y), float(measured), pair.trace_v / y))
    return rows


def xi_bounds(data: BoundaryData, n: int, tol: float = 1e-6) -> Tuple[bool, float]:
    """Check ``-n/2 <= ξ <= n/2`` for a rank-n perturbation.

    :return: (bounds hold, max |ξ|)
    """
    peak = float(np.max(np.abs(data.xi))) if data.xi.size else 0.0
    return peak <= n / 2 + tol, peak


def finite_rank_sweep(
    pair: AccumulativePair,
    n: int,
    grid: Optional[np.ndarray] = None,
    schedule: Optional[EpsilonSchedule] = None,
    points: Sequence[complex] = (1j, 0.5 + 2j, -3 + 0.5j),
    threads: int = 1,
) -> SweepResult:
    """Chain ``H_k = H0 - i sum_{j<=k} α_j P_j`` for k = 1..n.

    Checks the bound ``|ξ_k| <= k/2`` on each link and the product rule
    ``det_{H_n/H0} = prod_k det_{H_k/H_{k-1}}`` at the points.
    """
    if not 1 <= n <= pair.dim:
        raise ValueError(f"n must be between 1 and {pair.dim}, got {n}")
    if n > pair.v.rank:
        logger.warning(f"n = {n} exceeds rank(V) = {pair.v.rank}; trailing links are trivial")
    pairs = [pair.truncated(k) for k in range(1, n + 1)]
    if grid is None:
        grid, _ = default_grid(pair)
    data = [boundary_values(p, grid=grid, schedule=schedule, threads=threads) for p in pairs]
    checks = [xi_bounds(d, k) for k, d in enumerate(data, start=1)]
    residual = 0.0
    for z in points:
        direct = pert_det(pairs[-1], z).value
        product = 1.0 + 0j
        previous = pair.h0.entries
        for p in pairs:
            product *= det_ratio(p.h, previous, z)
            previous = p.h
        residual = max(residual, abs(product - direct) / max(abs(direct), 1e-300))
    return SweepResult(
        pairs=pairs,
        data=data,
        xi_max=[peak for _, peak in checks],
        bounds_hold=all(ok for ok, _ in checks),
        product_residual=float(residual),
    )


def boundary_relation(pair: AccumulativePair, grid: np.ndarray, epsilon: float) -> float:
    """Largest relative residual of the lower/upper boundary relation.

    ``det_{H/H0}(λ - i eps) = det_{H/H*}(λ - i eps) * conj(det_{H/H0}(λ + i eps))``
    """
    grid = np.asarray(grid, dtype=float)
    below = grid - 1j * epsilon
    above = grid + 1j * epsilon
    lhs = np.exp(_log_ratio_batch(pair.h, pair.h0.entries, below))
    adjoint = np.exp(_log_ratio_batch(pair.h, pair.h_adjoint, below))
    upper = np.exp(_log_ratio_batch(pair.h, pair.h0.entries, above))
    rhs = adjoint * np.conj(upper)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))


def limit_representation_check(
    pair: AccumulativePair, data: BoundaryData, z: complex
) -> Tuple[complex, complex, float]:
    """Rebuild det at ``z`` from ξ: ``|det(i)| exp((A) int K(λ) ξ(λ) dλ/(1+λ²))``.

    ``K(λ) = (1 + zλ)/(λ - z)``.

    :return: (direct, reconstructed, relative residual)
    """
    if z.imag <= 0:
        raise ValueError(f"z must lie in the upper half-plane, got {z}")
    direct = pert_det(pair, z).value
    integrand = data.xi_function().multiply(lambda lam: (1.0 + z * lam) / (lam - z))
    result = a_integral(integrand, weight="cauchy")
    reconstructed = abs(pert_det(pair, 1j).value) * np.exp(result.value)
    return direct, complex(reconstructed), float(abs(reconstructed - direct) / abs(direct))
