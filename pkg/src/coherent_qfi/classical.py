"""Direct-imaging baselines: intensity pattern, classical Fisher information, Sparrow limit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import bisect

from .errors import (
    DegenerateCriterionError,
    DegenerateStateError,
    GridCoverageError,
    InvalidParameterError,
    NoRootError,
)
from .psf import PsfModel, overlap_table
from .states import EPS, TwoPointState

MIN_COVERAGE = 10.0
DEFAULT_COVERAGE = 12.0
POINTS_PER_WIDTH = 100
FD_STEP = 1e-4  # in PSF widths
DARK_FRACTION = 1e-15
TINY = 1e-300


@dataclass(frozen=True, eq=False)
class IntensityPattern:
    x: np.ndarray
    density: np.ndarray

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def mass(self) -> float:
        return float(simpson(self.density, x=self.x))


def default_grid(psf: PsfModel, s: float, s0: float = 0.0, coverage=DEFAULT_COVERAGE):
    """Uniform grid about ``s0`` reaching ``|s|/2 + coverage`` PSF widths, odd length."""
    w = psf.width
    half = abs(s) / 2.0 + coverage * w
    n = int(math.ceil(half / (w / POINTS_PER_WIDTH)))
    return s0 + np.linspace(-half, half, 2 * n + 1)


def _check_grid(x, psf, s, s0):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 9:
        raise InvalidParameterError("grid needs at least 9 points")
    steps = np.diff(x)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps.mean()) * x.size:
        raise InvalidParameterError("grid must be uniform and increasing")
    need = abs(s) / 2.0 + MIN_COVERAGE * psf.width
    if x[0] > s0 - need * (1 - 1e-12) or x[-1] < s0 + need * (1 - 1e-12):
        raise GridCoverageError(
            f"grid [{x[0]:.4g}, {x[-1]:.4g}] does not cover +-{need:.4g} about {s0:g}"
        )
    return x


def _shifted(psf, s, s0, x, order=0):
    return psf.amplitude(x + s0 + s / 2.0, order), psf.amplitude(x + s0 - s / 2.0, order)


def intensity_pattern(state: TwoPointState, x=None) -> IntensityPattern:
    """Position density <x|rho|x>, renormalised on the grid."""
    psf = state.psf
    x = default_grid(psf, state.s, state.s0) if x is None else _check_grid(x, psf, state.s, state.s0)
    a, b = _shifted(psf, state.s, state.s0, x)
    R = state.R
    p = np.real(R[0, 0]) * a**2 + np.real(R[1, 1]) * b**2 + 2.0 * np.real(R[0, 1]) * a * b
    p = np.clip(p, 0.0, None)
    return IntensityPattern(x, p / simpson(p, x=x))


def _components(psf, s, coherence, x):
    """Real q1, q2 with p(x|s) = q1^2 + q2^2, exactly normalised; ``s`` and ``x`` broadcast."""
    s = np.asarray(s, dtype=float)
    a, b = _shifted(psf, s, 0.0, x)
    if isinstance(coherence, str):
        if coherence != "incoherent":
            raise InvalidParameterError(f"unknown coherence {coherence!r}")
        r = math.sqrt(0.5)
        return r * a, r * b
    phi = float(coherence)
    c, sn = math.cos(phi), math.sin(phi)
    u = overlap_table(psf).one_minus_delta(s)
    norm = 2.0 * (2.0 * math.cos(phi / 2.0) ** 2 - c * np.asarray(u))
    if np.any(norm < EPS):
        raise DegenerateStateError(f"state vanishes for phi={phi:g} at s={s.min():g}")
    r = 1.0 / np.sqrt(norm)
    return r * (a + c * b), r * sn * b


def density(psf: PsfModel, s, coherence, x):
    """Normalised p(x|s) for separations ``s`` broadcast against positions ``x``."""
    q1, q2 = _components(psf, s, coherence, x)
    return q1**2 + q2**2


def classical_fisher_s(psf: PsfModel, s: float, coherence="incoherent", x=None, full_output=False):
    """Per-photon Fisher information of position-resolved intensity detection for ``s``.

    ``d p / d s`` is formed from the amplitudes (product rule) with a
    Richardson-extrapolated central difference of step ``1e-4`` PSF widths.
    Where ``p < 1e-15 max p`` and the density is a single real amplitude
    squared, the integrand is replaced by its limit ``4 (d q / d s)^2``;
    ``info`` reports how many grid points and how much mass that touched.
    """
    if not np.isfinite(s) or s < 0:
        raise InvalidParameterError(f"s must be finite and >= 0, got {s!r}")
    x = default_grid(psf, s) if x is None else _check_grid(x, psf, s, 0.0)
    h = FD_STEP * psf.width

    q1, q2 = _components(psf, s, coherence, x)

    def central(step):
        up = _components(psf, s + step, coherence, x)
        dn = _components(psf, s - step, coherence, x)
        return [(u - d) / (2.0 * step) for u, d in zip(up, dn)]

    coarse, fine = central(h), central(h / 2.0)
    dq1, dq2 = [(4.0 * f - c) / 3.0 for f, c in zip(fine, coarse)]

    p = q1**2 + q2**2
    dp = 2.0 * (q1 * dq1 + q2 * dq2)
    integrand = np.zeros_like(p)
    ok = p > TINY
    integrand[ok] = dp[ok] ** 2 / p[ok]

    dark = p < DARK_FRACTION * p.max()
    single_amplitude = not isinstance(coherence, str) and abs(math.sin(float(coherence))) < 1e-12
    if single_amplitude:
        integrand[dark] = 4.0 * dq1[dark] ** 2
    value = float(simpson(integrand, x=x))
    if not full_output:
        return value
    info = {
        "dark_points": int(dark.sum()),
        "dark_mass": float(np.sum(p[dark]) * (x[1] - x[0])),
        "dark_regularized": bool(single_amplitude and dark.any()),
        "step": h,
    }
    return value, info


def _midpoint_curvature_weight(coherence):
    if isinstance(coherence, str):
        if coherence != "incoherent":
            raise InvalidParameterError(f"unknown coherence {coherence!r}")
        return 0.0
    return math.cos(float(coherence))


def midpoint_curvature(psf: PsfModel, s, coherence="incoherent"):
    """Sign-carrying d^2 p / dx^2 at the midpoint, up to a positive factor.

    For an even amplitude this is ``(1 - c) psi'(s/2)^2 + (1 + c) psi(s/2) psi''(s/2)``
    with ``c = cos(phi)`` (``c = 0`` for the incoherent mixture).
    """
    c = _midpoint_curvature_weight(coherence)
    a = np.asarray(s, dtype=float) / 2.0
    psi, d1, d2 = (psf.amplitude(a, k) for k in (0, 1, 2))
    return (1.0 - c) * d1**2 + (1.0 + c) * psi * d2


def sparrow_separation(psf: PsfModel, coherence="incoherent") -> float:
    """Smallest separation at which the midpoint intensity stops being a maximum."""
    c = _midpoint_curvature_weight(coherence)
    if 1.0 + c < 1e-12:
        raise DegenerateCriterionError(
            "anti-phase sources: the midpoint intensity is zero for every separation, "
            "so the Sparrow criterion is vacuous"
        )
    w = psf.width
    if not midpoint_curvature(psf, 0.0, coherence) < 0:
        raise InvalidParameterError("PSF intensity is not peaked at the origin")
    grid = np.concatenate([[0.0], w * np.geomspace(1e-3, 12.0, 64)])
    vals = midpoint_curvature(psf, grid, coherence)
    change = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if change.size == 0:
        raise NoRootError("midpoint curvature does not change sign on (0, 12 widths]")
    i = change[0]
    if vals[i + 1] == 0:
        return float(grid[i + 1])
    return float(
        bisect(lambda t: float(midpoint_curvature(psf, t, coherence)), grid[i], grid[i + 1], xtol=1e-8 * w)
    )
