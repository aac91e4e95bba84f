"""Quantum Fisher information for the separation of two point sources.

Pure superpositions use a closed form in the overlap function,

    F = (p2 + c d'') / (1 + c d) - c^2 d'^2 / (1 + c d)^2,   c = cos(phi),

rearranged so that nothing cancels near the dark fringe (phi ~ pi, s ~ 0).
With eps = 1 + c = 2 cos^2(phi/2), g = -c, u = 1 - d, u2 = p2 + d'' and the
dark-fringe defect J = u (2 p2 - u2) - d'^2 (all of which the overlap table
evaluates without subtraction):

    1 + c d   = eps + g u
    numerator = eps p2 (1 + g) + eps g (u p2 - u2) + g^2 J

Mixed states (rank-2 and general multi-parameter problems) go through the
symmetric logarithmic derivative in the four-dimensional span of
{psi_+, psi_-, P psi_+, P psi_-}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateStateError,
    DivergingLimitError,
    InvalidParameterError,
    NotAStateError,
)
from .psf import PsfModel, overlap_table
from .states import (
    EPS,
    TRACE_TOL,
    TwoPointState,
    entangled_state,
    incoherent_mixture,
    sub_ensembles,
    superposition_state,
)

SERIES_THRESHOLD = 1e-6
SLD_CUTOFF = 1e-12
_GRAM_CUTOFF = 1e-14


@dataclass(frozen=True)
class QfiResult:
    param_labels: tuple
    value: Union[float, np.ndarray]
    method: str
    context: dict = field(default_factory=dict)

    def __float__(self) -> float:
        if np.ndim(self.value) == 0:
            return float(self.value)
        if np.shape(self.value) == (1, 1):
            return float(self.value[0, 0])
        raise TypeError("multi-parameter QFI matrix has no scalar value")


def _pure_pieces(table, s, phi):
    c = math.cos(phi)
    eps = 2.0 * math.cos(phi / 2.0) ** 2
    g = -c
    u = float(table.one_minus_delta(s))
    u2 = float(table.curvature_gap(s))
    j = float(table.dark_defect(s))
    p2 = table.p2
    a = eps + g * u
    num = eps * p2 * (2.0 * math.sin(phi / 2.0) ** 2) + eps * g * (u * p2 - u2) + g * g * j
    return a, num


def qfi_pure(state: TwoPointState) -> QfiResult:
    """QFI for ``s`` of ``|Phi><Phi| / N`` with ``|Phi> = |psi_+> + e^{i phi}|psi_->``."""
    if state.form != "pure":
        raise InvalidParameterError("qfi_pure needs a pure superposition state")
    table = overlap_table(state.psf)
    a, num = _pure_pieces(table, state.s, state.phi)
    if 2.0 * a < EPS:
        raise DegenerateStateError(f"degenerate state at s={state.s:g}, phi={state.phi:g}")
    guarded = a < SERIES_THRESHOLD
    return QfiResult(
        ("s",),
        num / a**2,
        "series" if guarded else "closed-form",
        {"s": state.s, "s0": state.s0, "phi": state.phi},
    )


def qfi_coherent(psf: PsfModel, s: float, phi: float) -> QfiResult:
    return qfi_pure(superposition_state(psf, s, phi))


def qfi_zero_separation(psf: PsfModel, phi: float) -> float:
    """Limit s -> 0 at fixed phi: tan^2(phi/2) <P^2>."""
    half = math.cos(phi / 2.0)
    if abs(half) < 1e-12:
        raise DivergingLimitError(
            f"QFI diverges as phi -> pi at zero separation (phi={phi!r})",
            law="tan(phi/2)**2 * p2",
        )
    return math.tan(phi / 2.0) ** 2 * overlap_table(psf).p2


def qfi_small_s_coefficients(psf: PsfModel):
    """Coefficients of s^2 in F_pi(s) and F_0(s) for small separation."""
    t = overlap_table(psf)
    c_pi = (t.p6 * t.p2 - t.p4**2) / (36.0 * t.p2**2)
    c_0 = (t.p4 - t.p2**2) / 4.0
    return c_pi, c_0


def _ket_gram(table, s, s0):
    # kets: psi_+, psi_-, P psi_+, P psi_-
    shifts = np.array([s0 + s / 2.0, s0 - s / 2.0] * 2)
    powers = np.array([0, 0, 1, 1])
    g = np.empty((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            d = shifts[j] - shifts[i]
            order = powers[i] + powers[j]
            if order == 0:
                g[i, j] = table.delta(d)
            elif order == 1:
                g[i, j] = -1j * table.ddelta(d)
            else:
                g[i, j] = -table.d2delta(d)
    return 0.5 * (g + g.conj().T)


_EMBED = np.zeros((4, 2))
_EMBED[0, 0] = _EMBED[1, 1] = 1.0


def _ket_derivative(label):
    d = np.zeros((4, 2), dtype=complex)
    if label == "s":
        d[2, 0], d[3, 1] = 0.5j, -0.5j
    elif label == "s0":
        d[2, 0], d[3, 1] = 1j, 1j
    else:
        raise InvalidParameterError(f"unknown parameter {label!r}")
    return d


def _parse_params(params):
    out = []
    for p in params:
        if isinstance(p, str):
            out.append((p, None))
        else:
            label, dR = p
            dR = np.asarray(dR, dtype=complex)
            if dR.shape != (2, 2) or np.max(np.abs(dR - dR.conj().T)) > 1e-12:
                raise InvalidParameterError(f"derivative of R for {label!r} must be 2x2 hermitian")
            out.append((str(label), dR))
    return out


def sld_qfi_matrix(rho, drhos, cutoff=SLD_CUTOFF):
    """QFI matrix Re Tr(rho L_a L_b) from the SLD equation in rho's eigenbasis."""
    lam, U = np.linalg.eigh(rho)
    total = lam[:, None] + lam[None, :]
    keep = total > cutoff
    sld = []
    for d in drhos:
        dd = U.conj().T @ d @ U
        L = np.zeros_like(dd)
        L[keep] = 2.0 * dd[keep] / total[keep]
        sld.append(L)
    n = len(sld)
    F = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            F[a, b] = F[b, a] = np.real(np.trace((lam[:, None] * sld[a]) @ sld[b]))
    return F


def qfi_rank2(state: TwoPointState, params: Sequence = ("s",)) -> QfiResult:
    """QFI (matrix) of a two-ket state via the symmetric logarithmic derivative.

    ``params`` lists ``'s'``, ``'s0'`` and/or ``(label, dR)`` pairs where
    ``dR`` is the derivative of the coefficient matrix for that parameter.
    The state is ``K R K^dagger / tr(R G)``; the normalisation is kept while
    differentiating, which makes the pure form (R carries 1/N(s)) exact.
    """
    specs = _parse_params(params)
    if not specs:
        raise InvalidParameterError("at least one parameter is required")
    if abs(state.trace - 1.0) > TRACE_TOL:
        raise NotAStateError(f"tr(rho) = {state.trace:.12g}")
    if state.eigenvalues().min() < -EPS:
        raise NotAStateError("induced operator is not positive semidefinite")

    table = overlap_table(state.psf)
    G = _ket_gram(table, state.s, state.s0)
    lam, V = np.linalg.eigh(G)
    keep = lam > _GRAM_CUTOFF * lam.max()
    W = V[:, keep] / np.sqrt(lam[keep])

    def onb(C):
        return W.conj().T @ G @ C @ G @ W

    R = state.R
    C_rho = _EMBED @ R @ _EMBED.T
    tr = float(np.real(np.trace(C_rho @ G)))
    C_rho = C_rho / tr

    drhos = []
    for label, dR in specs:
        if dR is None:
            D = _ket_derivative(label)
            dX = D @ R @ _EMBED.T + _EMBED @ R @ D.conj().T
        else:
            dX = _EMBED @ dR @ _EMBED.T
        dtr = float(np.real(np.trace(dX @ G)))
        drhos.append(onb(dX / tr - C_rho * dtr / tr))

    F = sld_qfi_matrix(onb(C_rho), drhos)
    value = float(F[0, 0]) if len(specs) == 1 else F
    return QfiResult(
        tuple(label for label, _ in specs),
        value,
        "sld-subspace",
        {"s": state.s, "s0": state.s0, "phi": state.phi, "R": state.R.copy()},
    )


def qfi_incoherent(psf: PsfModel, s: float) -> QfiResult:
    return qfi_rank2(incoherent_mixture(psf, s), ["s"])


def qfi_entangled(psf: PsfModel, s: float, phi: float) -> QfiResult:
    """Pure-state QFI of the system-qubit composite, built in its eight-ket span."""
    state = entangled_state(psf, s, phi)
    table = overlap_table(psf)
    G8 = np.kron(np.eye(2), _ket_gram(table, s, 0.0))
    e = np.exp(1j * phi)
    ket = np.zeros(8, dtype=complex)
    dket = np.zeros(8, dtype=complex)
    # index = 4 * qubit + ket, kets psi_+, psi_-, P psi_+, P psi_-
    for q, sign in ((0, 1.0), (1, -1.0)):
        ket[4 * q + 0] = 0.5
        ket[4 * q + 1] = 0.5 * sign * e
        dket[4 * q + 2] = 0.5 * 0.5j
        dket[4 * q + 3] = 0.5 * sign * e * -0.5j
    n = np.real(ket.conj() @ G8 @ ket)
    dd = np.real(dket.conj() @ G8 @ dket)
    od = ket.conj() @ G8 @ dket
    value = 4.0 * dd / n - 4.0 * abs(od) ** 2 / n**2
    return QfiResult(("s",), float(value), "closed-form", {"s": s, "phi": phi, "norm": state.norm})


def qfi_sorted_total(psf: PsfModel, s: float, phi: float) -> QfiResult:
    """Probability-weighted QFI of the two qubit-conditioned channels.

    Uses ``p2 - c^2 d'^2 / (1 - c^2 d^2)`` with the denominator written as
    ``sin^2(phi) + c^2 (1 - d)(1 + d)``; the member QFIs and weights are
    reported in the context (None for a degenerate member).
    """
    table = overlap_table(psf)
    c = math.cos(phi)
    p2 = table.p2
    d = float(table.delta(s))
    dd = float(table.ddelta(s))
    u = float(table.one_minus_delta(s))
    sn2 = math.sin(phi) ** 2
    if sn2 < 1e-24:  # phi within round-off of 0 or pi
        sn2 = 0.0
    denom = sn2 + c * c * u * (1.0 + d)
    if denom > 0.0:
        value = p2 - c * c * dd * dd / denom
    else:
        # s == 0 with sin(phi) == 0: d'^2 / (1 - d^2) -> p2
        value = p2 * (1.0 - c * c)

    members = sub_ensembles(psf, s, phi)
    ctx = {"s": s, "phi": phi}
    for i, m in enumerate(members, start=1):
        ctx[f"w{i}"] = m.weight
        ctx[f"f{i}"] = None if m.degenerate else float(qfi_pure(m.state).value)
    return QfiResult(("s",), value, "closed-form", ctx)
