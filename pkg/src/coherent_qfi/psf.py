"""Point-spread-function models, the overlap function and momentum moments.

A PSF here is a real, even, unit-norm amplitude ``psi(x)``.  Everything the
Fisher-information formulas need is carried by the overlap function

    delta(s) = <psi| exp(i s P) |psi> = integral psi(x) psi(x + s) dx,

its first two derivatives in ``s`` and the even momentum moments <P^2>,
<P^4>, <P^6>.  The shift ``exp(i a P)`` maps ``psi(x)`` to ``psi(x + a)``
(``P = -i d/dx``), so every derived quantity is even in ``s``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Union

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import InvalidParameterError, InvalidPsfError

# Below this value of p2*s**2 the grid variant evaluates the
# dark-fringe defect from its Taylor series instead of the direct difference.
_GRID_SERIES_SWITCH = 7e-3
# Number of even moments (m2 ... m12) kept internally for that series.
_GRID_SERIES_ORDER = 6

COVERAGE_RECOMMENDED = 12.0
COVERAGE_WARN = 8.0


@dataclass(frozen=True)
class GaussianPsf:
    """Analytic Gaussian amplitude with position variance ``sigma**2``."""

    sigma: float
    kind: str = field(default="analytic-gaussian", init=False)

    @property
    def width(self) -> float:
        return self.sigma

    @property
    def momentum_variance(self) -> float:
        return 1.0 / (4.0 * self.sigma**2)

    def amplitude(self, x, order=0):
        """psi(x) or its first/second derivative."""
        x = np.asarray(x, dtype=float)
        s2 = self.sigma**2
        psi = (2.0 * math.pi * s2) ** -0.25 * np.exp(-(x**2) / (4.0 * s2))
        if order == 0:
            return psi
        if order == 1:
            return -x / (2.0 * s2) * psi
        if order == 2:
            return (x**2 / (4.0 * s2**2) - 1.0 / (2.0 * s2)) * psi
        raise InvalidParameterError(f"derivative order {order} not supported")


@dataclass(frozen=True, eq=False)
class GridPsf:
    """Sampled amplitude on a uniform grid symmetric about the origin.

    Instances are built by :func:`make_grid_psf`, which centres, symmetrises
    and normalises the samples.
    """

    x: np.ndarray
    values: np.ndarray
    kind: str = field(default="sampled-grid", init=False)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def half_extent(self) -> float:
        return float(self.x[-1])

    @cached_property
    def width(self) -> float:
        return float(np.sqrt(simpson(self.x**2 * self.values**2, x=self.x)))

    @property
    def momentum_variance(self) -> float:
        return self._spectrum.moments[1]

    @cached_property
    def _spline(self):
        return CubicSpline(self.x, self.values, bc_type="natural", extrapolate=False)

    def amplitude(self, x, order=0):
        x = np.asarray(x, dtype=float)
        if order not in (0, 1, 2):
            raise InvalidParameterError(f"derivative order {order} not supported")
        out = self._spline(x, order) if order else self._spline(x)
        return np.nan_to_num(out, nan=0.0)

    @cached_property
    def _spectrum(self) -> "_Spectrum":
        return _Spectrum.from_samples(self.values, self.dx)


PsfModel = Union[GaussianPsf, GridPsf]


@dataclass(frozen=True)
class _Spectrum:
    """Folded momentum density of a sampled PSF (non-negative frequencies)."""

    k: np.ndarray
    w: np.ndarray
    moments: tuple  # (m0, m2, m4, ..., m_{2*_GRID_SERIES_ORDER})

    @classmethod
    def from_samples(cls, values, dx):
        n = 1 << int(math.ceil(math.log2(4 * len(values))))
        padded = np.zeros(n)
        padded[: len(values)] = values
        power = np.abs(np.fft.rfft(padded)) ** 2
        k = 2.0 * math.pi * np.fft.rfftfreq(n, d=dx)
        w = power.copy()
        # rfft keeps q = 0 and the Nyquist bin once, every other bin stands for +-k
        w[1:-1] *= 2.0
        w /= w.sum()
        k2 = k**2
        moments = tuple(float(np.sum(w * k2**j)) for j in range(_GRID_SERIES_ORDER + 1))
        return cls(k=k, w=w, moments=moments)


def make_gaussian_psf(sigma: float) -> GaussianPsf:
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidParameterError(f"sigma must be positive and finite, got {sigma!r}")
    return GaussianPsf(float(sigma))


def make_grid_psf(x_min: float, dx: float, amplitude, sym_tol: float = 1e-6) -> GridPsf:
    """Build a sampled PSF from amplitudes on the grid ``x_min + i*dx``.

    The samples are shifted so that the centroid of ``psi**2`` sits at the
    origin, resampled onto the largest grid symmetric about it, checked for
    even symmetry (relative to the peak amplitude, at ``sym_tol``),
    symmetrised exactly and renormalised to unit L2 norm.
    """
    a = np.asarray(amplitude, dtype=float)
    if a.ndim != 1 or a.size < 9:
        raise InvalidParameterError("a grid PSF needs at least 9 samples")
    if not (np.isfinite(dx) and dx > 0):
        raise InvalidParameterError(f"dx must be positive, got {dx!r}")
    if not np.all(np.isfinite(a)) or not np.isfinite(x_min):
        raise InvalidParameterError("grid PSF samples must be finite")

    x = x_min + dx * np.arange(a.size)
    norm = simpson(a**2, x=x)
    if not norm > 0:
        raise InvalidPsfError("PSF amplitude has zero norm")
    centroid = simpson(x * a**2, x=x) / norm
    xc = x - centroid
    half = min(-xc[0], xc[-1])
    m = int(math.floor(half / dx + 1e-9))
    if m < 4:
        raise InvalidPsfError("centred grid leaves fewer than 9 symmetric samples")
    xs = dx * np.arange(-m, m + 1)
    offset = centroid / dx
    if abs(offset - round(offset)) < 1e-9:
        # mirror points are samples already
        start = int(round((xs[0] - (x_min - centroid)) / dx))
        vals = a[start : start + xs.size].copy()
    else:
        vals = CubicSpline(xc, a)(xs)

    peak = np.max(np.abs(vals))
    asym = np.max(np.abs(vals - vals[::-1])) / peak
    if asym > sym_tol:
        raise InvalidPsfError(
            f"PSF is not even about its centroid (relative asymmetry {asym:.3g} > {sym_tol:g})"
        )
    vals = 0.5 * (vals + vals[::-1])
    vals /= math.sqrt(simpson(vals**2, x=xs))

    psf = GridPsf(xs, vals)
    if xs[-1] < COVERAGE_WARN * psf.width:
        warnings.warn(
            f"grid covers +-{xs[-1]:.3g}, below {COVERAGE_WARN:g} rms widths "
            f"({COVERAGE_RECOMMENDED:g} recommended)",
            stacklevel=2,
        )
    return psf


def load_grid_psf(path, sym_tol: float = 1e-6) -> GridPsf:
    """Read a two-column ``x amplitude`` text file ('#' starts a comment)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise InvalidPsfError(f"{path}: expected two columns, found {data.shape[1]}")
    x, a = data[:, 0], data[:, 1]
    if x.size < 9:
        raise InvalidParameterError("a grid PSF needs at least 9 samples")
    steps = np.diff(x)
    dx = float(np.mean(steps))
    if dx <= 0 or np.max(np.abs(steps - dx)) > 1e-6 * dx:
        raise InvalidPsfError(f"{path}: grid is not uniform")
    return make_grid_psf(float(x[0]), dx, a, sym_tol=sym_tol)


@dataclass(frozen=True)
class OverlapTable:
    """Overlap function, its derivatives and the momentum moments of a PSF.

    Besides ``delta``, ``ddelta`` and ``d2delta`` the table carries three
    combinations that lose all precision if formed by subtraction at small
    separation:

    ``one_minus_delta``  1 - delta(s)
    ``curvature_gap``    p2 + d2delta(s)
    ``dark_defect``      (1 - delta)(p2 - d2delta) - ddelta**2,
                         which starts at order s**6
    """

    delta: Callable
    ddelta: Callable
    d2delta: Callable
    one_minus_delta: Callable
    curvature_gap: Callable
    dark_defect: Callable
    p2: float
    p4: float
    p6: float
    # True where dark_defect was taken from its Taylor series
    uses_series: Callable = lambda s: np.zeros(np.shape(s), dtype=bool)

    @property
    def momentum_variance(self) -> float:
        return self.p2


@lru_cache(maxsize=64)
def overlap_table(psf: PsfModel) -> OverlapTable:
    if isinstance(psf, GaussianPsf):
        return _gaussian_table(psf)
    if isinstance(psf, GridPsf):
        return _grid_table(psf)
    raise InvalidParameterError(f"unknown PSF model {type(psf).__name__}")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _sinh_minus_id(y):
    """sinh(y) - y without cancellation for small y."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1.0
    ys = np.where(small, y, 0.0)
    term = ys**3 / 6.0
    acc = term.copy()
    for n in range(2, 12):
        term = term * ys**2 / ((2 * n) * (2 * n + 1))
        acc = acc + term
    return np.where(small, acc, np.sinh(np.where(small, 1.0, y)) - y)


def _gaussian_table(psf: GaussianPsf) -> OverlapTable:
    v = psf.momentum_variance

    def delta(s):
        return np.exp(-v * np.square(s) / 2.0)

    def ddelta(s):
        return -v * np.asarray(s, dtype=float) * delta(s)

    def d2delta(s):
        return v * (v * np.square(s) - 1.0) * delta(s)

    def one_minus_delta(s):
        return -np.expm1(-v * np.square(s) / 2.0)

    def curvature_gap(s):
        return v * one_minus_delta(s) + v**2 * np.square(s) * delta(s)

    def dark_defect(s):
        # equals v * (1 - delta**2 - v s**2 delta) = 2 v e^{-y} (sinh y - y)
        y = v * np.square(s) / 2.0
        return _out(2.0 * v * np.exp(-y) * _sinh_minus_id(y))

    def uses_series(s):
        return np.asarray(v * np.square(s) / 2.0 < 1.0)

    return OverlapTable(
        delta=delta,
        ddelta=ddelta,
        d2delta=d2delta,
        one_minus_delta=one_minus_delta,
        curvature_gap=curvature_gap,
        dark_defect=dark_defect,
        p2=v,
        p4=3.0 * v**2,
        p6=15.0 * v**3,
        uses_series=uses_series,
    )


def _dark_defect_series(moments):
    """Polynomial coefficients (in s) of the dark-fringe defect from moments."""
    m = moments
    order = len(m) - 1
    deg = 2 * order + 2
    u = np.zeros(deg + 1)
    b = np.zeros(deg + 1)
    t = np.zeros(deg + 1)
    b[0] = m[1]
    for n in range(0, order + 1):
        if n >= 1:
            u[2 * n] = (-1) ** (n + 1) * m[n] / math.factorial(2 * n)
        if n + 1 <= order:
            b[2 * n] += (-1) ** n * m[n + 1] / math.factorial(2 * n)
            t[2 * n + 1] = (-1) ** n * m[n + 1] / math.factorial(2 * n + 1)
    poly = np.polynomial.polynomial
    j = poly.polysub(poly.polymul(u, b), poly.polymul(t, t))
    # terms above s**(2*order) involve moments that were not supplied
    j = j[: 2 * order + 1]
    j[:6] = 0.0
    return j


def _grid_table(psf: GridPsf) -> OverlapTable:
    spec = psf._spectrum
    k, w = spec.k, spec.w
    p2 = spec.moments[1]
    series = _dark_defect_series(spec.moments)

    def _sum(fn, s):
        s = np.asarray(s, dtype=float)
        ks = np.multiply.outer(s, k)
        return fn(ks) @ w if s.ndim else float(fn(ks) @ w)

    def delta(s):
        return _sum(np.cos, s)

    def ddelta(s):
        s = np.asarray(s, dtype=float)
        return -(np.sin(np.multiply.outer(s, k)) @ (w * k))

    def d2delta(s):
        s = np.asarray(s, dtype=float)
        return -(np.cos(np.multiply.outer(s, k)) @ (w * k**2))

    def one_minus_delta(s):
        return _sum(lambda ks: 2.0 * np.sin(ks / 2.0) ** 2, s)

    def curvature_gap(s):
        s = np.asarray(s, dtype=float)
        return (2.0 * np.sin(np.multiply.outer(s, k) / 2.0) ** 2) @ (w * k**2)

    def uses_series(s):
        return np.asarray(p2 * np.square(s) < _GRID_SERIES_SWITCH)

    def dark_defect(s):
        s = np.asarray(s, dtype=float)
        half = np.multiply.outer(s, k) / 2.0
        sh, ch = np.sin(half), np.cos(half)
        u = (2.0 * sh**2) @ w
        b = (2.0 * ch**2) @ (w * k**2)
        t = (2.0 * sh * ch) @ (w * k)
        direct = u * b - t**2
        approx = np.polynomial.polynomial.polyval(s, series)
        return _out(np.where(uses_series(s), approx, direct))

    return OverlapTable(
        delta=delta,
        ddelta=ddelta,
        d2delta=d2delta,
        one_minus_delta=one_minus_delta,
        curvature_gap=curvature_gap,
        dark_defect=dark_defect,
        p2=p2,
        p4=spec.moments[2],
        p6=spec.moments[3],
        uses_series=uses_series,
    )
