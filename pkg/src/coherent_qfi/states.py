"""Coherence matrices of two shifted PSF copies.

Every state is stored as a 2x2 coefficient matrix ``R`` over the
non-orthogonal kets ``|psi_+>, |psi_->`` with
``|psi_+-> = exp(i P (s0 +- s/2)) |psi>``, so that

    rho = sum_ab R_ab |psi_a><psi_b|.

Nothing is ever put on a spatial grid; inner products come from the
overlap table of the PSF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateStateError, InvalidParameterError, NotAStateError
from .psf import PsfModel, overlap_table

EPS = 1e-12
TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-12


def _pair_gram(psf, s):
    d = float(overlap_table(psf).delta(s))
    return np.array([[1.0, d], [d, 1.0]])


def _psd_sqrt(g):
    lam, v = np.linalg.eigh(g)
    return (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T


def pure_coefficients(phi, norm=1.0):
    """R for ``(|psi_+> + e^{i phi}|psi_->)(...)^dagger / norm``."""
    e = np.exp(1j * phi)
    return np.array([[1.0, np.conj(e)], [e, 1.0]], dtype=complex) / norm


@dataclass(frozen=True, eq=False)
class TwoPointState:
    psf: PsfModel
    s: float
    R: np.ndarray
    s0: float = 0.0
    phi: Optional[float] = None
    norm: Optional[float] = None  # N = <Phi|Phi>, pure form only

    @property
    def form(self) -> str:
        return "pure" if self.phi is not None else "rank2"

    @property
    def gram(self) -> np.ndarray:
        return _pair_gram(self.psf, self.s)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.R @ self.gram)))

    def induced_density(self) -> np.ndarray:
        """rho as a 2x2 matrix in an orthonormal basis of span{psi_+, psi_-}."""
        h = _psd_sqrt(self.gram)
        return h @ self.R @ h

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.induced_density())


@dataclass(frozen=True, eq=False)
class SubEnsemble:
    """One qubit-conditioned channel; ``state`` is None when degenerate."""

    phi: float
    weight: float
    state: Optional[TwoPointState]

    @property
    def degenerate(self) -> bool:
        return self.state is None


def _stable_norm(psf, s, phi):
    # N = 2[1 + cos(phi) delta] = 2[2 cos^2(phi/2) - cos(phi) (1 - delta)]
    u = float(overlap_table(psf).one_minus_delta(s))
    return 2.0 * (2.0 * math.cos(phi / 2.0) ** 2 - math.cos(phi) * u)


def _check_finite(**values):
    for name, v in values.items():
        if not np.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")


def superposition_state(psf: PsfModel, s: float, phi: float) -> TwoPointState:
    _check_finite(s=s, phi=phi)
    norm = _stable_norm(psf, s, phi)
    if norm < EPS:
        raise DegenerateStateError(
            f"|Phi> vanishes at s={s:g}, phi={phi:g} (N={norm:.3g}); "
            "destructive interference at zero separation"
        )
    return TwoPointState(psf, float(s), pure_coefficients(phi, norm), phi=float(phi), norm=norm)


def sub_ensembles(psf: PsfModel, s: float, phi: float):
    """Constructive (phi) and destructive (phi + pi) channels with weights.

    The weights are the probabilities of the two qubit outcomes,
    ``<Phi_1|Phi_1> = N_phi / 4`` and ``<Phi_2|Phi_2> = N_{phi+pi} / 4``.
    """
    _check_finite(s=s, phi=phi)
    out = []
    for p in (phi, phi + math.pi):
        w = _stable_norm(psf, s, p) / 4.0
        state = superposition_state(psf, s, p) if w >= EPS else None
        out.append(SubEnsemble(float(p), w, state))
    if out[0].degenerate and out[1].degenerate:
        raise DegenerateStateError("both sub-ensembles are degenerate")
    return tuple(out)


def incoherent_mixture(psf: PsfModel, s: float) -> TwoPointState:
    _check_finite(s=s)
    return TwoPointState(psf, float(s), np.eye(2, dtype=complex) / 2.0)


def rank2_state(psf: PsfModel, s: float, s0: float, R, auto_normalize: bool = False) -> TwoPointState:
    """General two-ket coherence matrix; ``R`` must induce a density operator."""
    _check_finite(s=s, s0=s0)
    R = np.array(R, dtype=complex)
    if R.shape != (2, 2):
        raise InvalidParameterError(f"R must be 2x2, got shape {R.shape}")
    if np.max(np.abs(R - R.conj().T)) > HERMITIAN_TOL:
        raise NotAStateError("R is not hermitian")
    R = 0.5 * (R + R.conj().T)
    state = TwoPointState(psf, float(s), R, s0=float(s0))
    tr = state.trace
    if abs(tr - 1.0) > TRACE_TOL:
        if not auto_normalize:
            raise NotAStateError(f"tr(R G) = {tr:.12g}, expected 1")
        if tr <= 0:
            raise NotAStateError(f"cannot normalise R with tr(R G) = {tr:.3g}")
        state = TwoPointState(psf, float(s), R / tr, s0=float(s0))
    lam = state.eigenvalues()
    if lam.min() < -EPS:
        raise NotAStateError(f"induced operator has eigenvalue {lam.min():.3g} < 0")
    return state


@dataclass(frozen=True, eq=False)
class EntangledState:
    """System-qubit ket in the basis psi_+ up_z, psi_- up_z, psi_+ down_z, psi_- down_z.

    ``2^{-1/2}(|psi_+> up_x + e^{i phi}|psi_-> down_x)`` with
    ``up_x, down_x = (up_z +- down_z)/sqrt(2)``.
    """

    psf: PsfModel
    s: float
    phi: float

    @property
    def coefficients(self) -> np.ndarray:
        e = np.exp(1j * self.phi)
        return 0.5 * np.array([1.0, e, 1.0, -e], dtype=complex)

    @property
    def gram(self) -> np.ndarray:
        return np.kron(np.eye(2), _pair_gram(self.psf, self.s))

    @property
    def norm(self) -> float:
        c = self.coefficients
        return float(np.real(c.conj() @ self.gram @ c))

    def reduced_state(self) -> TwoPointState:
        """Trace out the qubit."""
        c = self.coefficients.reshape(2, 2)  # [qubit, ket]
        R = sum(np.outer(row, row.conj()) for row in c)
        return TwoPointState(self.psf, self.s, R)

    def conditioned(self, outcome: str) -> SubEnsemble:
        """Project the qubit on ``'up'`` or ``'down'`` (z basis)."""
        if outcome not in ("up", "down"):
            raise InvalidParameterError("outcome must be 'up' or 'down'")
        ket = self.coefficients.reshape(2, 2)[0 if outcome == "up" else 1]
        g = _pair_gram(self.psf, self.s)
        weight = float(np.real(ket.conj() @ g @ ket))
        phi = self.phi if outcome == "up" else self.phi + math.pi
        state = superposition_state(self.psf, self.s, phi) if weight >= EPS else None
        return SubEnsemble(phi, weight, state)


def entangled_state(psf: PsfModel, s: float, phi: float) -> EntangledState:
    _check_finite(s=s, phi=phi)
    state = EntangledState(psf, float(s), float(phi))
    if abs(state.norm - 1.0) > EPS:
        raise NotAStateError(f"composite norm {state.norm!r} != 1")
    return state


def make_state(psf: PsfModel, s: float, coherence) -> TwoPointState:
    """``coherence`` is a phase in radians or the string ``'incoherent'``."""
    if isinstance(coherence, str):
        if coherence != "incoherent":
            raise InvalidParameterError(f"unknown coherence {coherence!r}")
        return incoherent_mixture(psf, s)
    return superposition_state(psf, s, float(coherence))
