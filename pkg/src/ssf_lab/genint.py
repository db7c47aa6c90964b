"""Generalized integration on sampled boundary functions.

A :class:`GridFunction` is a function sampled on a strictly increasing grid,
optionally carrying power-law tail models beyond either end and a set of
break points (excluded zones where the function may jump or blow up
logarithmically). On top of it this module provides:

- :func:`integrate`: segment-wise cubic-spline quadrature with a
  log-model for each excluded zone and analytic tails;
- :func:`hilbert_pv` / :func:`fft_hilbert` / :func:`hilbert_grid`: principal
  value transforms, unnormalized ``p.v. int f(y)/(y - x) dy`` or the
  classical ``T f(x) = (1/pi) p.v. int f(y)/(x - y) dy``;
- :func:`weak_l1_profile`: ``t * m{|f| > t}`` against dλ or dλ/(1+λ²);
- :func:`a_integral`: limits of integrals over ``{b <= |f| <= B}``;
- :func:`aleksandrov_reconstruct`, :func:`duality_check`,
  :func:`transform_profile` and :func:`divergence_study`.

Conventions: ``T`` multiplies ``(λ - z)^-1`` by ``i * sign(Im z)``, so
``T cos = sin`` and ``T T = -1``.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import IntegrationWarning, quad, simpson, trapezoid
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from ssf_lab.errors import (
    EdgeTooCloseError,
    NoConvergenceError,
    NonUniformGridError,
    NotWeakL1ZeroError,
    QuadratureBudgetExceededError,
    RuleNotAdmissibleError,
    TailModelRequiredError,
)

__all__ = [
    "Weight",
    "DEFAULT_SCHEDULE",
    "PowerTail",
    "GridFunction",
    "WeakL1Profile",
    "AIntegralResult",
    "DualityResult",
    "TransformProfile",
    "SequenceRule",
    "DivergenceRow",
    "DivergenceStudy",
    "integrate",
    "hilbert_pv",
    "fft_hilbert",
    "hilbert_grid",
    "weak_l1_profile",
    "a_integral",
    "aleksandrov_reconstruct",
    "duality_check",
    "transform_profile",
    "divergence_term",
    "divergence_study",
]

Weight = Literal["lebesgue", "cauchy"]

# Largest shrink factor of successive partial differences read as geometric.
_MAX_RATE = 0.5
DEFAULT_SCHEDULE: Tuple[Tuple[float, float], ...] = tuple(
    (10.0**-k, 10.0**k) for k in range(1, 9)
)

# Geometric ratio of the sample points used to follow tails past the grid.
_TAIL_RATIO = 1.02
_TAIL_REACH = 1e15
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(96)
_GAUSS_NODES = 0.5 * (_GAUSS_NODES + 1.0)
_GAUSS_WEIGHTS = 0.5 * _GAUSS_WEIGHTS


def _weight(lam: np.ndarray, weight: Weight) -> np.ndarray:
    if weight == "lebesgue":
        return np.ones_like(np.asarray(lam, dtype=float))
    if weight == "cauchy":
        return 1.0 / (1.0 + np.asarray(lam, dtype=float) ** 2)
    raise ValueError(f"Unknown weight '{weight}'")


def _measure(lo: np.ndarray, hi: np.ndarray, weight: Weight) -> np.ndarray:
    if weight == "lebesgue":
        return hi - lo
    return np.arctan(hi) - np.arctan(lo)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PowerTail:
    """Asymptotic model ``sum_j c_j λ^(exponent - j)``, optionally times a factor.

    :param exponent: leading integer power, at most -1
    :param coefficients: c_0, c_1, ... (real or complex)
    :param factor: optional callable multiplying the power series, used when
        a known prefactor is applied to a modelled function
    """

    exponent: int
    coefficients: Tuple[complex, ...]
    factor: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.exponent > -1:
            raise ValueError(f"Tail exponent must be <= -1, got {self.exponent}")
        if len(self.coefficients) == 0:
            raise ValueError("Tail model needs at least one coefficient")

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=complex)
        for j, c in enumerate(self.coefficients):
            out = out + c * np.power(lam, self.exponent - j)
        if self.factor is not None:
            out = out * self.factor(lam)
        if all(np.isreal(c) for c in self.coefficients) and self.factor is None:
            return out.real
        return out

    def times(self, g: Callable[[np.ndarray], np.ndarray]) -> "PowerTail":
        """Return this tail multiplied by ``g``."""
        if self.factor is None:
            factor = g
        else:
            inner = self.factor

            def factor(lam, inner=inner, g=g):
                return inner(lam) * g(lam)

        return PowerTail(self.exponent, self.coefficients, factor)

    @property
    def decay(self) -> int:
        """Effective decay exponent ignoring the factor."""
        return self.exponent


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function sampled on a strictly increasing grid.

    :param grid: abscissae
    :param values: samples, real or complex
    :param left_tail: model for λ < grid[0] (needs grid[0] < 0)
    :param right_tail: model for λ > grid[-1] (needs grid[-1] > 0)
    :param breaks: points inside the grid range, between samples, where the
        function may jump or have a logarithmic singularity
    """

    grid: np.ndarray
    values: np.ndarray
    left_tail: Optional[PowerTail] = None
    right_tail: Optional[PowerTail] = None
    breaks: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("A grid function needs at least two grid points")
        if values.shape != grid.shape:
            raise ValueError(
                f"Grid has {grid.size} points but values have shape {values.shape}"
            )
        if np.any(np.diff(grid) <= 0):
            raise ValueError("Grid must be strictly increasing")
        if self.left_tail is not None and grid[0] >= 0:
            raise ValueError("A left tail needs a grid starting below zero")
        if self.right_tail is not None and grid[-1] <= 0:
            raise ValueError("A right tail needs a grid ending above zero")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))

    def __len__(self) -> int:
        return self.grid.size

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def uniform(self) -> bool:
        steps = np.diff(self.grid)
        return bool(np.allclose(steps, steps.mean(), rtol=1e-9, atol=0.0))

    def multiply(self, g: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Pointwise product with a known function ``g``, tails included."""
        return GridFunction(
            grid=self.grid,
            values=self.values * g(self.grid),
            left_tail=None if self.left_tail is None else self.left_tail.times(g),
            right_tail=None if self.right_tail is None else self.right_tail.times(g),
            breaks=self.breaks,
        )

    def scaled(self, c: complex) -> "GridFunction":
        return self.multiply(lambda lam: np.full(np.shape(lam), c))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        """Same grid and breaks, new samples, no tails."""
        return GridFunction(self.grid, values, breaks=self.breaks)


@dataclass
class WeakL1Profile:
    """Samples of ``t * m{|f| > t}`` for log-spaced t."""

    t_values: np.ndarray
    t_times_measure: np.ndarray
    weight: Weight = "lebesgue"

    @property
    def small_t(self) -> float:
        """Value at the smallest sampled t."""
        return float(self.t_times_measure[0])

    @property
    def large_t(self) -> float:
        """Value at the largest sampled t."""
        return float(self.t_times_measure[-1])

    @property
    def peak(self) -> float:
        return float(np.max(self.t_times_measure)) if self.t_times_measure.size else 0.0

    def vanishes_at_ends(self, rel_tol: float = 0.05) -> bool:
        """Numerical o(1/t) test at both ends relative to the profile peak."""
        peak = self.peak
        if peak == 0.0:
            return True
        return self.small_t <= rel_tol * peak and self.large_t <= rel_tol * peak


@dataclass
class AIntegralResult:
    """Value of an A-integral with its truncation trace."""

    value: complex
    truncations: List[Tuple[float, float, complex]]
    converged: bool
    estimate: float


class DualityResult(NamedTuple):
    lhs: complex
    rhs: complex
    residual: float


@dataclass
class TransformProfile:
    """Weak-L¹ behaviour of ``g = p.v. int f(y)/(y - x) dy`` for f >= 0."""

    profile: WeakL1Profile
    mass: float
    limsup: float

    @property
    def ratio(self) -> float:
        """limsup of t * m(t) divided by 2 * int f."""
        return self.limsup / (2.0 * self.mass) if self.mass > 0 else float("nan")


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _quad(func: Callable[[float], complex], a: float, b: float) -> Tuple[complex, float]:
    """scipy quad for complex integrands; warnings are logged, not raised."""
    parts = []
    errors = []
    for pick in (np.real, np.imag):
        with warnings.catch_warnings(record=True) as messages:
            warnings.simplefilter("always", category=IntegrationWarning)
            value, error = quad(
                lambda u: float(pick(func(u))), a, b, limit=200, epsabs=1e-13, epsrel=1e-11
            )
        for message in messages:
            logger.warning(f"quad on [{a}, {b}]: {message.message}")
        parts.append(value)
        errors.append(error)
    return complex(parts[0], parts[1]), float(np.hypot(*errors))


def _layout(grid: np.ndarray, breaks: Sequence[float]):
    """Split a grid into smooth segments and excluded zones.

    :return: (segments as inclusive index pairs, zones as (i, breaks) where
        the zone lies between grid[i] and grid[i + 1])
    """
    inner = sorted(b for b in breaks if grid[0] < b < grid[-1])
    zones = {}
    for b in inner:
        i = int(np.searchsorted(grid, b))
        if grid[i] == b:
            raise ValueError(f"Break point {b} coincides with a grid point")
        zones.setdefault(i - 1, []).append(b)
    segments = []
    start = 0
    for i in sorted(zones):
        segments.append((start, i))
        start = i + 1
    segments.append((start, grid.size - 1))
    return segments, sorted(zones.items())


def _spline_integral(x: np.ndarray, y: np.ndarray) -> Tuple[complex, float]:
    if np.iscomplexobj(y):
        vr, er = _spline_integral(x, y.real)
        vi, ei = _spline_integral(x, y.imag)
        return complex(vr, vi), float(np.hypot(er, ei))
    n = x.size
    if n < 2:
        return 0.0, 0.0
    if n == 2:
        value = 0.5 * (y[0] + y[1]) * (x[1] - x[0])
        return float(value), float(0.5 * abs(y[1] - y[0]) * (x[1] - x[0]))
    if n == 3:
        value = trapezoid(y, x=x)
        return float(value), float(abs(value - simpson(y, x=x)))
    value = float(CubicSpline(x, y).integrate(x[0], x[-1]))
    return value, float(abs(value - simpson(y, x=x)))


def _spline_at(x: np.ndarray, y: np.ndarray, at: float, nu: int = 0) -> complex:
    if np.iscomplexobj(y):
        return complex(_spline_at(x, y.real, at, nu), _spline_at(x, y.imag, at, nu))
    return float(CubicSpline(x, y)(at, nu))


def _side_model(grid, values, near: int, far: Optional[int], b: float):
    """Fit ``a + c log d`` (d = distance to b) through two samples."""
    d1 = abs(grid[near] - b)
    if far is None:
        return values[near], 0.0 * values[near]
    d2 = abs(grid[far] - b)
    if d2 <= d1 * (1.0 + 1e-12):
        return values[near], 0.0 * values[near]
    c = (values[near] - values[far]) / (np.log(d1) - np.log(d2))
    return values[near] - c * np.log(d1), c


def _cut(a: float, c: float, level: float) -> float:
    """Distance ``d`` where ``a + c log d`` equals ``level``."""
    return float(np.exp(np.clip((level - a) / c, -700.0, 700.0)))


def _kept_window(a: float, c: float, low: float, high: float, gap: float) -> Tuple[float, float]:
    """Distances in ``[0, gap]`` where ``low <= a + c log d <= high``."""
    if c == 0:
        return (0.0, gap) if low <= a <= high else (0.0, 0.0)
    d_low, d_high = _cut(a, c, low), _cut(a, c, high)
    lo, hi = (d_high, d_low) if c < 0 else (d_low, d_high)
    return min(lo, gap), min(hi, gap)


def _log_model_integral(a, c, d: float):
    if d <= 0:
        return 0.0 * a
    return a * d + c * (d * np.log(d) - d)


def _zone_sides(grid, values, zones, i: int):
    """Left and right log models for the zone between grid[i] and grid[i+1]."""
    zone_index = {j for j, _ in zones}
    left_far = i - 1 if i - 1 >= 0 and (i - 1) not in zone_index else None
    right_far = i + 2 if i + 2 < grid.size and (i + 1) not in zone_index else None
    return left_far, right_far


def _zone_integral(grid, y, zones, i: int, bs: List[float]) -> Tuple[complex, float]:
    left_far, right_far = _zone_sides(grid, y, zones, i)
    a_l, c_l = _side_model(grid, y, i, left_far, bs[0])
    a_r, c_r = _side_model(grid, y, i + 1, right_far, bs[-1])
    d_l = bs[0] - grid[i]
    d_r = grid[i + 1] - bs[-1]
    left = _log_model_integral(a_l, c_l, d_l)
    right = _log_model_integral(a_r, c_r, d_r)
    # Between several breaks inside one gap nothing is sampled; use the mean edge value.
    middle = 0.5 * (y[i] + y[i + 1]) * (bs[-1] - bs[0])
    estimate = 0.01 * (abs(left - y[i] * d_l) + abs(right - y[i + 1] * d_r))
    return left + right + middle, float(estimate)


def _tail_integral(
    tail: PowerTail, edge: float, weight: Weight, outer: Optional[float] = None
) -> Tuple[complex, float]:
    """Integral of ``tail * w`` from ``edge`` outward to ``outer`` (or infinity)."""
    if outer is None and not _tail_is_integrable(tail, weight, edge):
        raise QuadratureBudgetExceededError(
            f"Tail with exponent {tail.decay} is not integrable against dλ"
        )
    lo = 0.0 if outer is None else edge / outer
    scale = abs(edge)

    def integrand(u):
        lam = edge / u
        return complex(tail(lam) * _weight(lam, weight)) * scale / u**2

    return _quad(integrand, lo, 1.0)


def _tail_hilbert(tail: PowerTail, edge: float, xs: np.ndarray) -> np.ndarray:
    """``int tail(λ)/(λ - x) dλ`` over the tail side, vectorized over x."""
    u = _GAUSS_NODES[:, None]
    lam = edge / u
    kernel = abs(edge) / u**2 / (lam - np.asarray(xs, dtype=float)[None, :])
    return np.sum(_GAUSS_WEIGHTS[:, None] * tail(lam) * kernel, axis=0)


def integrate(
    f: GridFunction,
    weight: Weight = "lebesgue",
    tails: bool = True,
    max_error: Optional[float] = None,
) -> Tuple[complex, float]:
    """Integrate a grid function over the real line.

    Smooth segments use a not-a-knot cubic spline (Simpson gives the error
    estimate); each excluded zone uses ``a + c log|λ - b|`` fitted on either
    side; tails are integrated from their models with scipy quad.

    :param f: the integrand samples
    :param weight: ``"lebesgue"`` or ``"cauchy"`` (dλ/(1+λ²))
    :param tails: include the tail models
    :param max_error: raise QuadratureBudgetExceededError above this estimate
    :return: (value, error estimate)
    """
    grid = f.grid
    y = f.values * _weight(grid, weight)
    segments, zones = _layout(grid, f.breaks)
    total = 0.0 * y[0]
    estimate = 0.0
    for start, stop in segments:
        value, err = _spline_integral(grid[start : stop + 1], y[start : stop + 1])
        total += value
        estimate += err
    for i, bs in zones:
        value, err = _zone_integral(grid, y, zones, i, bs)
        total += value
        estimate += err
    if tails:
        for tail, edge in ((f.left_tail, grid[0]), (f.right_tail, grid[-1])):
            if tail is None:
                continue
            value, err = _tail_integral(tail, edge, weight)
            total += value
            estimate += err
    if not np.iscomplexobj(f.values) and np.isreal(total):
        total = float(np.real(total))
    if max_error is not None and estimate > max_error:
        raise QuadratureBudgetExceededError(
            f"Quadrature error estimate {estimate:.3e} exceeds budget {max_error:.3e}"
        )
    return total, float(estimate)


# ---------------------------------------------------------------------------
# Hilbert transforms
# ---------------------------------------------------------------------------


def hilbert_pv(f: GridFunction, x: float, normalized: bool = False) -> complex:
    """Principal value ``p.v. int f(y)/(y - x) dy`` by singularity subtraction.

    ``int (f(y) - f(x))/(y - x) dy`` over the grid plus ``f(x) log((b-x)/(x-a))``
    plus the tail contributions.

    :param f: grid function (tails are used when present)
    :param x: interior evaluation point
    :param normalized: return ``(1/pi) p.v. int f(y)/(x - y) dy`` instead
    """
    grid = f.grid
    if grid.size < 4 or not (grid[1] < x < grid[-2]):
        raise EdgeTooCloseError(f"x = {x} is not interior to the grid")
    segments, zones = _layout(grid, f.breaks)
    for i, bs in zones:
        if grid[i] < x < grid[i + 1]:
            raise EdgeTooCloseError(f"x = {x} lies in the excluded zone around {bs}")
    start, stop = next((s, e) for s, e in segments if grid[s] <= x <= grid[e])
    xs = grid[start : stop + 1]
    ys = f.values[start : stop + 1]
    fx = _spline_at(xs, ys, x)
    slope = _spline_at(xs, ys, x, nu=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = (f.values - fx) / (grid - x)
    hit = np.abs(grid - x) <= 1e-14 * max(1.0, abs(x))
    quotient = np.where(hit, slope, quotient)
    inner, _ = integrate(GridFunction(grid, quotient, breaks=f.breaks), tails=False)
    total = inner + fx * np.log((grid[-1] - x) / (x - grid[0]))
    if f.left_tail is not None:
        total += _tail_hilbert(f.left_tail, grid[0], np.array([x]))[0]
    if f.right_tail is not None:
        total += _tail_hilbert(f.right_tail, grid[-1], np.array([x]))[0]
    if normalized:
        total = -total / np.pi
    if not f.is_complex and abs(np.imag(total)) == 0.0:
        return float(np.real(total))
    return complex(total)


def _sinc_kernel(n: int) -> np.ndarray:
    m = np.arange(-(n - 1), n)
    kernel = np.zeros(m.size)
    odd = m % 2 != 0
    kernel[odd] = 2.0 / (np.pi * m[odd])
    return kernel


def fft_hilbert(f: GridFunction, periodic: bool = False) -> GridFunction:
    """Classical transform ``T f`` on a uniform grid by FFT.

    In periodic mode the spectrum is multiplied by ``-i sign(k)``; otherwise
    the samples are treated as a band-limited (sinc) interpolant and the
    discrete kernel ``2/(pi m)`` for odd m is applied by linear FFT
    convolution, with tail contributions added from the tail models.

    :param f: uniformly sampled function
    :param periodic: treat the samples as one period
    """
    if not f.uniform:
        raise NonUniformGridError("fft_hilbert needs a uniform grid")
    values = f.values
    n = values.size
    if periodic:
        spectrum = np.fft.fft(values)
        freqs = np.fft.fftfreq(n)
        out = np.fft.ifft(-1j * np.sign(freqs) * spectrum)
    else:
        out = fftconvolve(values, _sinc_kernel(n), mode="same")
        for tail, edge in ((f.left_tail, f.grid[0]), (f.right_tail, f.grid[-1])):
            if tail is not None:
                out = out - _tail_hilbert(tail, edge, f.grid) / np.pi
    if not np.iscomplexobj(values):
        out = np.real(out)
    return GridFunction(f.grid, out, breaks=f.breaks)


def hilbert_grid(f: GridFunction, normalized: bool = True, margin: int = 2) -> GridFunction:
    """Transform at every interior grid point.

    Uniform grids without breaks use :func:`fft_hilbert`; otherwise
    :func:`hilbert_pv` is evaluated point by point, skipping ``margin``
    points at each end and the points adjacent to excluded zones.
    """
    if f.uniform and not f.breaks:
        out = fft_hilbert(f)
        if not normalized:
            out = out.with_values(-np.pi * out.values)
        return out
    _, zones = _layout(f.grid, f.breaks)
    blocked = set()
    for i, _bs in zones:
        blocked.update({i, i + 1})
    points = []
    values = []
    for k in range(margin, f.grid.size - margin):
        if k in blocked:
            continue
        points.append(f.grid[k])
        values.append(hilbert_pv(f, f.grid[k], normalized=normalized))
    return GridFunction(
        np.array(points),
        np.array(values),
        breaks=tuple(b for b in f.breaks if points and points[0] < b < points[-1]),
    )


# ---------------------------------------------------------------------------
# Weak L1 and level sets
# ---------------------------------------------------------------------------


def _cell_level_measure(x0, x1, a0, a1, t: float, weight: Weight) -> np.ndarray:
    """Weighted measure of ``{linear interpolant of |f| > t}`` per cell."""
    above0 = a0 > t
    above1 = a1 > t
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(a1 != a0, (t - a0) / (a1 - a0), 0.0)
    xc = x0 + np.clip(s, 0.0, 1.0) * (x1 - x0)
    lo = np.where(above0, x0, xc)
    hi = np.where(above1, x1, xc)
    out = _measure(lo, hi, weight)
    return np.where(above0 | above1, out, 0.0)


def _tail_samples(tail: PowerTail, edge: float, t_min: float) -> Tuple[np.ndarray, np.ndarray]:
    """Geometric samples of |tail| from the grid edge outward, in increasing λ order."""
    reach = int(np.ceil(np.log(_TAIL_REACH) / np.log(_TAIL_RATIO)))
    lam = edge * _TAIL_RATIO ** np.arange(reach + 1)
    mags = np.abs(tail(lam))
    below = np.nonzero(mags < 0.25 * t_min)[0]
    if below.size:
        stop = below[0] + 1
    else:
        stop = lam.size
        logger.warning(
            f"Tail from {edge} stays above t = {t_min:.1e} up to |λ| = {abs(lam[-1]):.1e}"
        )
    lam, mags = lam[:stop], mags[:stop]
    if edge < 0:
        return lam[::-1], mags[::-1]
    return lam, mags


def _zone_level_measure(grid, mags, zones, i, bs, t, weight) -> float:
    left_far, right_far = _zone_sides(grid, mags, zones, i)
    total = 0.0
    for near, far, b, gap in (
        (i, left_far, bs[0], bs[0] - grid[i]),
        (i + 1, right_far, bs[-1], grid[i + 1] - bs[-1]),
    ):
        a, c = _side_model(grid, mags, near, far, b)
        a, c = float(np.real(a)), float(np.real(c))
        lo, hi = _kept_window(a, c, t, np.inf, gap)
        length = hi - lo
        total += length * float(_weight(np.array(b), weight))
    if len(bs) > 1 and max(mags[i], mags[i + 1]) > t:
        total += float(_measure(np.array(bs[0]), np.array(bs[-1]), weight))
    return total


def weak_l1_profile(
    f: GridFunction, weight: Weight = "lebesgue", t_values: Optional[Sequence[float]] = None
) -> WeakL1Profile:
    """Distribution-function profile ``t * m{|f| > t}``.

    Level sets inside the grid come from linear interpolation of |f| between
    samples, inside excluded zones from the log models, and beyond the grid
    from the tail models, which dominate for small t.

    :param f: real-valued grid function
    :param weight: measure for the level sets
    :param t_values: positive levels, default 65 points on [1e-8, 1e8]
    """
    if f.is_complex and np.any(np.abs(np.imag(f.values)) > 0):
        raise ValueError("weak_l1_profile expects a real-valued function")
    t_values = (
        np.logspace(-8, 8, 65) if t_values is None else np.asarray(t_values, dtype=float)
    )
    if np.any(t_values <= 0):
        raise ValueError("Levels t must be positive")
    grid = f.grid
    mags = np.abs(f.values)
    _, zones = _layout(grid, f.breaks)
    zone_cells = np.zeros(grid.size - 1, dtype=bool)
    for i, _bs in zones:
        zone_cells[i] = True
    x0, x1 = grid[:-1][~zone_cells], grid[1:][~zone_cells]
    a0, a1 = mags[:-1][~zone_cells], mags[1:][~zone_cells]

    t_min = float(t_values.min())
    tails = []
    for tail, edge, edge_mag in (
        (f.left_tail, grid[0], mags[0]),
        (f.right_tail, grid[-1], mags[-1]),
    ):
        if tail is None:
            if edge_mag > t_min:
                raise TailModelRequiredError(
                    f"Level sets for t < {edge_mag:.3e} leave the grid at {edge} "
                    "and no tail model is available"
                )
            continue
        tails.append(_tail_samples(tail, edge, t_min))

    out = np.empty_like(t_values)
    for k, t in enumerate(t_values):
        m = float(np.sum(_cell_level_measure(x0, x1, a0, a1, t, weight)))
        for i, bs in zones:
            m += _zone_level_measure(grid, mags, zones, i, bs, t, weight)
        for lam, tail_mags in tails:
            m += float(
                np.sum(
                    _cell_level_measure(
                        lam[:-1], lam[1:], tail_mags[:-1], tail_mags[1:], t, weight
                    )
                )
            )
        out[k] = t * m
    return WeakL1Profile(t_values=t_values, t_times_measure=out, weight=weight)


# ---------------------------------------------------------------------------
# A-integral
# ---------------------------------------------------------------------------


def _kept_fraction(a0, a1, b: float, big: float) -> Tuple[np.ndarray, np.ndarray]:
    """Sub-interval [s_lo, s_hi] of each cell where the interpolated |f| is in [b, B]."""
    flat = a1 == a0
    with np.errstate(divide="ignore", invalid="ignore"):
        s_b = (b - a0) / (a1 - a0)
        s_big = (big - a0) / (a1 - a0)
    s_lo = np.clip(np.minimum(s_b, s_big), 0.0, 1.0)
    s_hi = np.clip(np.maximum(s_b, s_big), 0.0, 1.0)
    inside = (a0 >= b) & (a0 <= big)
    s_lo = np.where(flat, np.where(inside, 0.0, 1.0), s_lo)
    s_hi = np.where(flat, np.where(inside, 1.0, 1.0), s_hi)
    return s_lo, s_hi


def _linear_piece(y0, y1, h, s1, s2):
    return h * (y0 * (s2 - s1) + 0.5 * (y1 - y0) * (s2**2 - s1**2))


def _tail_is_integrable(tail: PowerTail, weight: Weight, edge: float) -> bool:
    """Integrability against the weight, factor included."""
    if weight == "cauchy" or tail.decay <= -2:
        return True
    if tail.factor is None:
        return False
    mags = np.abs(tail(edge * np.array([1e3, 1e4])))
    if mags[1] == 0.0:
        return True
    if mags[0] == 0.0:
        return False
    return np.log10(mags[1] / mags[0]) <= -1.5


def _partial_a_integral(f: GridFunction, weight: Weight, b: float, big: float, base):
    grid = f.grid
    y = f.values * _weight(grid, weight)
    mags = np.abs(f.values)
    grid_total, zones, tail_total = base
    h = np.diff(grid)
    zone_cells = np.zeros(grid.size - 1, dtype=bool)
    for i, _bs in zones:
        zone_cells[i] = True
    s_lo, s_hi = _kept_fraction(mags[:-1], mags[1:], b, big)
    whole = _linear_piece(y[:-1], y[1:], h, 0.0, 1.0)
    kept = _linear_piece(y[:-1], y[1:], h, s_lo, s_hi)
    excluded = np.where(zone_cells, 0.0, whole - kept)
    partial = grid_total - np.sum(excluded)
    for i, bs in zones:
        if max(mags[i], mags[i + 1]) < b:
            partial -= _zone_integral(grid, y, zones, i, bs)[0]
            continue
        left_far, right_far = _zone_sides(grid, mags, zones, i)
        for near, far, brk, gap in (
            (i, left_far, bs[0], bs[0] - grid[i]),
            (i + 1, right_far, bs[-1], grid[i + 1] - bs[-1]),
        ):
            a, c = _side_model(grid, mags, near, far, brk)
            a, c = float(np.real(a)), float(np.real(c))
            lo, hi = _kept_window(a, c, b, big, gap)
            if lo == 0.0 and hi == gap:
                continue
            ay, cy = _side_model(grid, y, near, far, brk)
            kept = _log_model_integral(ay, cy, hi) - _log_model_integral(ay, cy, lo)
            partial -= _log_model_integral(ay, cy, gap) - kept
    return partial + tail_total


def _tail_contributions(f: GridFunction, weight: Weight, b: float) -> complex:
    total = 0.0
    for tail, edge in ((f.left_tail, f.grid[0]), (f.right_tail, f.grid[-1])):
        if tail is None:
            continue
        if _tail_is_integrable(tail, weight, edge):
            total += _tail_integral(tail, edge, weight)[0]
            continue
        lam, mags = _tail_samples(tail, edge, b)
        if edge < 0:
            lam, mags = lam[::-1], mags[::-1]
        below = np.nonzero(mags < b)[0]
        outer = lam[below[0]] if below.size else lam[-1]
        total += _tail_integral(tail, edge, weight, outer=outer)[0]
    return total


def a_integral(
    f: GridFunction,
    weight: Weight = "lebesgue",
    schedule: Optional[Sequence[Tuple[float, float]]] = None,
    rtol: float = 1e-5,
) -> AIntegralResult:
    """A-integral: limit of integrals over ``{b <= |f| <= B}``.

    Truncation acts on the magnitude of the full integrand ``f``; the weight
    belongs to the measure. Tails that are integrable against the weight
    enter through their b -> 0 limit, taken analytically from the model.

    :param f: the full integrand
    :param weight: ``"lebesgue"`` or ``"cauchy"``
    :param schedule: pairs (b_k, B_k) with b_k decreasing and B_k increasing
    :param rtol: relative agreement required between the last three partials;
        partials still drifting geometrically are extrapolated when the
        predicted remainder is within tolerance
    """
    schedule = list(DEFAULT_SCHEDULE if schedule is None else schedule)
    if len(schedule) < 3:
        raise ValueError("The truncation schedule needs at least three levels")
    lows = np.array([b for b, _ in schedule])
    highs = np.array([big for _, big in schedule])
    t_values = np.logspace(np.log10(lows.min()), np.log10(highs.max()), 33)
    if f.is_complex:
        magnitude = GridFunction(
            f.grid,
            np.abs(f.values),
            left_tail=_magnitude_tail(f.left_tail),
            right_tail=_magnitude_tail(f.right_tail),
            breaks=f.breaks,
        )
    else:
        magnitude = f
    profile = weak_l1_profile(magnitude, weight=weight, t_values=t_values)
    if not profile.vanishes_at_ends():
        raise NotWeakL1ZeroError(
            f"t*m(t) does not vanish at the ends: {profile.small_t:.3e} at t = "
            f"{t_values[0]:.0e}, {profile.large_t:.3e} at t = {t_values[-1]:.0e} "
            f"(peak {profile.peak:.3e})"
        )

    grid = f.grid
    y = f.values * _weight(grid, weight)
    segments, zones = _layout(grid, f.breaks)
    grid_total = 0.0 * y[0]
    quad_error = 0.0
    for start, stop in segments:
        value, err = _spline_integral(grid[start : stop + 1], y[start : stop + 1])
        grid_total += value
        quad_error += err
    for i, bs in zones:
        value, err = _zone_integral(grid, y, zones, i, bs)
        grid_total += value
        quad_error += err
    magnitude = float(trapezoid(np.abs(y), x=grid))

    truncations = []
    for b, big in schedule:
        tail_total = _tail_contributions(f, weight, b)
        partial = _partial_a_integral(f, weight, b, big, (grid_total, zones, tail_total))
        truncations.append((float(b), float(big), complex(partial)))
        logger.debug(f"A-integral partial at b={b:.0e}, B={big:.0e}: {partial}")

    last = np.array([p for _, _, p in truncations[-3:]])
    ref = max(abs(last[-1]), 1e-3 * magnitude, 1e-300)
    spread = float(np.max(np.abs(last - last[-1])))
    tolerance = max(rtol * ref, quad_error)
    value, estimate = last[-1], spread + quad_error
    if spread > tolerance:
        remainder = _geometric_remainder(last)
        if remainder is None or abs(remainder) > tolerance:
            raise NoConvergenceError(
                f"Truncated integrals did not settle: last three differ by {spread:.3e} "
                f"(tolerance {tolerance:.3e})"
            )
        value = last[-1] + remainder
        estimate = 2.0 * abs(remainder) + quad_error
        logger.debug(f"A-integral partials extrapolated by {abs(remainder):.3e}")
    if not f.is_complex:
        value = float(np.real(value))
    return AIntegralResult(
        value=value, truncations=truncations, converged=True, estimate=float(estimate)
    )


def _geometric_remainder(last: np.ndarray) -> Optional[complex]:
    """Remaining drift of partials whose differences shrink geometrically.

    Returns None unless the last difference is at most half the one before.
    """
    d1, d2 = last[1] - last[0], last[2] - last[1]
    if d1 == 0:
        return None
    ratio = d2 / d1
    if abs(ratio) > _MAX_RATE:
        return None
    return complex(d2 * ratio / (1.0 - ratio))


def _magnitude_tail(tail: Optional[PowerTail]) -> Optional[PowerTail]:
    if tail is None:
        return None

    def ratio(lam, tail=tail):
        lam = np.asarray(lam, dtype=float)
        return np.abs(tail(lam)) / np.power(lam, tail.exponent)

    # |tail| written as lam^p times a factor, keeping the decay exponent.
    return PowerTail(tail.exponent, (1.0,), ratio)


# ---------------------------------------------------------------------------
# Reconstruction and duality
# ---------------------------------------------------------------------------


def aleksandrov_reconstruct(
    part: Literal["real", "imag"],
    boundary: GridFunction,
    anchor: complex,
    z: complex,
    schedule: Optional[Sequence[Tuple[float, float]]] = None,
) -> complex:
    """Recover an analytic function in the upper half-plane from one boundary part.

    ``part="real"``: ``f(z) = i Im f(i) + (1/(pi i)) (A) int K(λ) Re f(λ) dλ/(1+λ²)``;
    ``part="imag"``: ``f(z) = Re f(i) + (1/pi) (A) int K(λ) Im f(λ) dλ/(1+λ²)``;
    with ``K(λ) = (1 + λ z)/(λ - z)``.

    :param part: which boundary part ``boundary`` holds
    :param boundary: real samples of Re f or Im f on the axis
    :param anchor: the value f(i)
    :param z: evaluation point with Im z > 0
    """
    if z.imag <= 0:
        raise ValueError(f"Evaluation point must lie in the upper half-plane, got {z}")

    def kernel(lam):
        return (1.0 + lam * z) / (lam - z)

    result = a_integral(boundary.multiply(kernel), weight="cauchy", schedule=schedule)
    if part == "real":
        return 1j * np.imag(anchor) + result.value / (np.pi * 1j)
    if part == "imag":
        return np.real(anchor) + result.value / np.pi
    raise ValueError(f"Unknown part '{part}'")


def duality_check(
    h: GridFunction,
    phi: GridFunction,
    transform_h: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    transform_phi: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> DualityResult:
    """Check ``int h (T phi) = -(A) int (T h) phi`` on a common grid.

    :param h: an L¹ function
    :param phi: a bounded function with bounded transform
    :param transform_h: closed form of ``T h`` if known, else computed
    :param transform_phi: closed form of ``T phi`` if known, else computed
    """
    if h.grid.shape != phi.grid.shape or np.any(h.grid != phi.grid):
        raise ValueError("h and phi must share one grid")

    def numeric(g: GridFunction):
        tg = hilbert_grid(g, normalized=True)
        return lambda lam, tg=tg: np.interp(lam, tg.grid, np.real(tg.values)) + (
            1j * np.interp(lam, tg.grid, np.imag(tg.values)) if tg.is_complex else 0.0
        )

    t_phi = transform_phi if transform_phi is not None else numeric(phi)
    t_h = transform_h if transform_h is not None else numeric(h)

    lhs_f = GridFunction(
        h.grid,
        h.values * t_phi(h.grid),
        left_tail=h.left_tail.times(t_phi) if (h.left_tail and transform_phi) else None,
        right_tail=h.right_tail.times(t_phi) if (h.right_tail and transform_phi) else None,
        breaks=h.breaks,
    )
    lhs, _ = integrate(lhs_f)
    rhs_f = GridFunction(
        phi.grid,
        phi.values * t_h(phi.grid),
        left_tail=phi.left_tail.times(t_h) if (phi.left_tail and transform_h) else None,
        right_tail=phi.right_tail.times(t_h) if (phi.right_tail and transform_h) else None,
        breaks=h.breaks,
    )
    rhs = -a_integral(rhs_f).value
    return DualityResult(lhs=lhs, rhs=rhs, residual=float(abs(lhs - rhs)))


def transform_profile(
    f: GridFunction, t_values: Optional[Sequence[float]] = None, moments: int = 4
) -> TransformProfile:
    """Weak-L¹ profile of ``g(x) = p.v. int f(y)/(y - x) dy`` for compactly supported f >= 0.

    Beyond the grid ``g(x) = -sum_k m_k / x^(k+1)`` with ``m_k = int y^k f``,
    which makes ``t * m(t)`` tend to ``2 int f`` as t -> 0.

    :param f: nonnegative samples vanishing near both grid ends
    :param t_values: levels, default 41 points on [1e-6, 1e2]
    :param moments: number of moments in the tail model
    """
    if np.any(np.real(f.values) < 0):
        raise ValueError("transform_profile expects a nonnegative function")
    t_values = (
        np.logspace(-6, 2, 41) if t_values is None else np.asarray(t_values, dtype=float)
    )
    coeffs = []
    for k in range(moments):
        m_k, _ = integrate(f.with_values(np.real(f.values) * f.grid**k), tails=False)
        coeffs.append(-float(np.real(m_k)))
    mass = -coeffs[0]
    g = hilbert_grid(f.with_values(np.real(f.values)), normalized=False)
    tail = PowerTail(-1, tuple(coeffs))
    g = GridFunction(g.grid, np.real(g.values), left_tail=tail, right_tail=tail)
    profile = weak_l1_profile(g, t_values=t_values)
    small = t_values <= t_values.min() * 10.0
    limsup = float(np.max(profile.t_times_measure[small]))
    return TransformProfile(profile=profile, mass=float(mass), limsup=limsup)


# ---------------------------------------------------------------------------
# Divergent series study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceRule:
    """A positive sequence α_n for the divergence study.

    :param kind: ``"log_power"`` (α_n = 1/(n ln(n+1)^q)), ``"power"``
        (α_n = n^-p) or ``"explicit"``
    :param param: q or p
    :param values: explicit α_1, α_2, ...
    """

    kind: str = "log_power"
    param: float = 2.0
    values: Tuple[float, ...] = ()

    def alphas(self, n: int) -> np.ndarray:
        """α_1, ..., α_n."""
        idx = np.arange(1, n + 1, dtype=float)
        if self.kind == "log_power":
            return 1.0 / (idx * np.log(idx + 1.0) ** self.param)
        if self.kind == "power":
            return idx ** (-self.param)
        if self.kind == "explicit":
            if n > len(self.values):
                raise RuleNotAdmissibleError(
                    f"Explicit sequence has {len(self.values)} terms, {n} requested"
                )
            return np.asarray(self.values[:n], dtype=float)
        raise RuleNotAdmissibleError(f"Unknown sequence rule '{self.kind}'")

    def check_admissible(self, n_max: int):
        """Require sum α_n < inf and sum α_n ln α_n = -inf.

        :raises RuleNotAdmissibleError: when the rule gives a convergent or
            non-summable setting
        """
        if self.kind == "log_power":
            if not 1.0 < self.param <= 2.0:
                raise RuleNotAdmissibleError(
                    f"1/(n ln(n+1)^q) needs 1 < q <= 2 (sum α_n converges, "
                    f"sum α_n ln α_n diverges); got q = {self.param}"
                )
        elif self.kind == "power":
            raise RuleNotAdmissibleError(
                "n^-p never qualifies: either sum α_n diverges (p <= 1) or "
                "sum α_n ln α_n converges (p > 1)"
            )
        elif self.kind == "explicit":
            logger.warning(
                "Explicit sequences are finite; only positivity can be checked"
            )
        alphas = self.alphas(n_max)
        if np.any(alphas < 0) or not np.all(np.isfinite(alphas)):
            raise RuleNotAdmissibleError("Sequence must be finite and nonnegative")


class DivergenceRow(NamedTuple):
    n: int
    closed_form: float
    quadrature: float
    error: float


@dataclass
class DivergenceStudy:
    """Table of ``int_0^1 xi_N`` for growing N with growth diagnostics."""

    rule: SequenceRule
    rows: List[DivergenceRow]

    @property
    def increasing(self) -> bool:
        values = [row.closed_form for row in self.rows]
        return all(b > a for a, b in zip(values, values[1:]))

    @property
    def max_error(self) -> float:
        return max((row.error for row in self.rows), default=0.0)

    @property
    def growth_ratios(self) -> List[float]:
        """Increments divided by the ln ln N growth of a divergent tail.

        A bounded sequence drives these ratios to zero; ratios bounded below
        across the tested range are read as unbounded growth.
        """
        ratios = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            model = np.log(np.log(cur.n + 1.0) / np.log(prev.n + 1.0)) / np.pi
            ratios.append((cur.closed_form - prev.closed_form) / model if model > 0 else 0.0)
        return ratios

    def unbounded(self, floor: float = 0.5) -> bool:
        """True when values increase and every growth ratio stays above ``floor``."""
        ratios = self.growth_ratios
        return bool(ratios) and self.increasing and min(ratios) >= floor


def divergence_term(alpha: np.ndarray) -> np.ndarray:
    """``int_0^1 arctan(α/λ) dλ`` in closed form (zero for α = 0)."""
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_part = np.where(alpha > 0, alpha * np.log(np.where(alpha > 0, alpha, 1.0)), 0.0)
    return 0.5 * alpha * np.log1p(alpha**2) + np.arctan(alpha) - log_part


def _xi_integral_quadrature(alphas: np.ndarray) -> float:
    """``int_0^1 (1/pi) sum arctan(α_n/λ) dλ`` by quad after λ = e^-s."""
    alphas = alphas[alphas > 0]
    if alphas.size == 0:
        return 0.0

    def integrand(s):
        return float(np.sum(np.arctan(alphas * np.exp(s)))) * np.exp(-s) / np.pi

    with warnings.catch_warnings(record=True) as messages:
        warnings.simplefilter("always", category=IntegrationWarning)
        value, _ = quad(integrand, 0.0, 60.0, limit=500, epsabs=1e-12, epsrel=1e-12)
    for message in messages:
        logger.warning(f"divergence quadrature: {message.message}")
    return float(value)


def divergence_study(
    rule: SequenceRule = SequenceRule(), n_values: Sequence[int] = (10, 100, 1000)
) -> DivergenceStudy:
    """Closed-form and quadrature values of ``int_0^1 xi_N`` for each N.

    ``xi_N(λ) = (1/pi) sum_{n<=N} arctan(α_n/λ)`` is the spectral shift of the
    diagonal pair H0 = 0, V = diag(α_1..α_N).

    :param rule: the sequence α_n
    :param n_values: increasing N values
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] < 1:
        raise ValueError("N values must be positive and increasing")
    rule.check_admissible(n_values[-1])
    all_alphas = rule.alphas(n_values[-1])
    rows = []
    for n in n_values:
        alphas = all_alphas[:n]
        closed = float(np.sum(divergence_term(alphas)) / np.pi)
        numeric = _xi_integral_quadrature(alphas)
        rows.append(DivergenceRow(n, closed, numeric, abs(closed - numeric)))
        logger.info(f"Divergence study N={n}: closed form {closed:.8f}, quadrature {numeric:.8f}")
    return DivergenceStudy(rule=rule, rows=rows)
