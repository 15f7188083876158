"""Eigen-beamformers, null-space projection and the two hybrid BFC designs.

Case A assumes ``Nrf = 2 Ns`` and ideal phase shifters: the SI-nulling
precoder is designed fully-digitally and then decomposed exactly.
Case B has ``Ns <= Nrf < 2 Ns`` and codebook-constrained analog beams: the
null-space projection is applied to the digital precoder after an OMP
hybrid approximation.
"""

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_geometry import quantize_phases


class DesignInfeasibleError(ValueError):
    """The effective SI channel leaves no null space to transmit in."""


class DesignCase(str, enum.Enum):
    EIGEN_ONLY = "eigen_only"
    CASE_A = "case_a"
    CASE_B = "case_b"


@dataclass(frozen=True)
class HybridBeamformer:
    analog: np.ndarray
    digital: np.ndarray

    def __post_init__(self):
        if self.analog.shape[1] != self.digital.shape[0]:
            raise ValueError(
                f"analog {self.analog.shape} and digital {self.digital.shape} do not chain"
            )

    @property
    def effective(self):
        return self.analog @ self.digital

    @property
    def num_rf(self):
        return self.analog.shape[1]

    @classmethod
    def fully_digital(cls, f):
        """Degenerate hybrid pair with identity analog stage (``Nrf = Na``)."""
        return cls(np.eye(f.shape[0], dtype=complex), np.asarray(f, dtype=complex))


@dataclass
class BfcDesign:
    precoder_i: HybridBeamformer
    combiner_i: HybridBeamformer
    precoder_k: np.ndarray
    combiner_j: np.ndarray
    case: DesignCase
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def residual_si(self, h_ii):
        """Received SI matrix ``W^H H_ii F`` through the effective beamformers."""
        return self.combiner_i.effective.conj().T @ h_ii @ self.precoder_i.effective


def _phase_normalize(u):
    # make each column's largest-magnitude entry real positive
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    return u * (np.abs(pivots) / np.where(pivots == 0, 1, pivots))


def _as_array(h):
    return getattr(h, "h", h)


def normalize_columns(f, nt, power="stream"):
    """Scale a precoder to satisfy the transmit power constraint.

    ``power="stream"`` gives every column norm ``sqrt(nt)``; ``"total"``
    gives the whole matrix Frobenius norm ``sqrt(nt)``. Zero columns are
    left at zero.
    """
    f = np.asarray(f, dtype=complex)
    if power == "total":
        norm = np.linalg.norm(f)
        return f * (np.sqrt(nt) / norm) if norm > 0 else f
    if power != "stream":
        raise ValueError(f"unknown power mode {power!r}")
    norms = np.linalg.norm(f, axis=0)
    scale = np.divide(np.sqrt(nt), norms, out=np.zeros_like(norms), where=norms > 0)
    return f * scale


def _leading_singular_vectors(h, ns):
    h = _as_array(h)
    if ns > min(h.shape):
        raise ValueError(f"ns={ns} exceeds min(Nr, Nt)={min(h.shape)}")
    u, s, vh = np.linalg.svd(h)
    return u[:, :ns], s, vh.conj().T[:, :ns]


def eigen_precoder(h, ns, power="stream"):
    """``Ns`` leading right singular vectors of ``h``, scaled to ``sqrt(Nt)``
    per column."""
    h = _as_array(h)
    _, _, v = _leading_singular_vectors(h, ns)
    return normalize_columns(_phase_normalize(v), h.shape[1], power)


def eigen_combiner(h, ns):
    """``Ns`` leading left singular vectors of ``h`` (orthonormal columns)."""
    u, _, _ = _leading_singular_vectors(h, ns)
    return _phase_normalize(u)


def is_rank_deficient(h, ns):
    """True when fewer than ``ns`` singular values of ``h`` are numerically nonzero."""
    s = np.linalg.svd(_as_array(h), compute_uv=False)
    return numerical_rank(s, _as_array(h).shape) < ns


def numerical_rank(s, shape):
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def null_space_basis(m):
    """Orthonormal basis (as columns) of the null space of ``m``.

    Singular values at or below ``max(p, q) * eps * sigma_max`` count as
    zero. Returns a ``q x 0`` array when ``m`` has full column rank.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    q = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(q, dtype=complex)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    rank = numerical_rank(s, m.shape)
    return vh[rank:].conj().T


def project_onto(b, x):
    """Orthogonal projection ``B B^H X`` onto the span of orthonormal ``B``."""
    b = np.asarray(b, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if b.shape[1] == 0:
        return np.zeros(x.shape, dtype=complex)
    return b @ (b.conj().T @ x)


def exact_hybrid_decomposition(f):
    """Split ``F`` (``Na x Ns``) into unit-modulus analog and digital factors
    with ``Nrf = 2 Ns`` such that ``analog @ digital == F``.

    Each entry ``f = |f| e^{j psi}`` is written as
    ``beta (e^{j(psi + a)} + e^{j(psi - a)})`` with ``a = arccos(|f| / 2 beta)``
    and ``beta`` set to half the column's largest magnitude.
    """
    f = np.asarray(f, dtype=complex)
    na, ns = f.shape
    analog = np.ones((na, 2 * ns), dtype=complex)
    digital = np.zeros((2 * ns, ns), dtype=complex)
    for i in range(ns):
        col = f[:, i]
        mag = np.abs(col)
        beta = mag.max() / 2.0
        if beta == 0:
            continue
        psi = np.angle(col)
        alpha = np.arccos(np.clip(mag / (2.0 * beta), 0.0, 1.0))
        analog[:, 2 * i] = np.exp(1j * (psi + alpha))
        analog[:, 2 * i + 1] = np.exp(1j * (psi - alpha))
        digital[2 * i : 2 * i + 2, i] = beta
    return HybridBeamformer(analog, digital)


def omp_hybrid_approx(f_target, codebook, nrf):
    """OMP hybrid approximation of ``f_target`` over codebook columns.

    Picks, ``nrf`` times, the codebook column most correlated with the
    normalized residual, refits the digital stage by least squares, and
    stops early once the residual vanishes. The returned digital stage is
    rescaled so every effective column matches the target column norm.
    """
    a = getattr(codebook, "matrix", codebook)
    f_target = np.asarray(f_target, dtype=complex)
    if nrf < 1:
        raise ValueError("nrf must be >= 1")
    target_norm = np.linalg.norm(f_target)
    f_res = f_target
    chosen = []
    digital = np.zeros((0, f_target.shape[1]), dtype=complex)
    for _ in range(nrf):
        psi = a.conj().T @ f_res
        energy = np.sum(np.abs(psi) ** 2, axis=1)
        # a repeated column adds no new direction, so it can never reduce the residual
        energy[chosen] = -np.inf
        if not np.isfinite(energy).any():
            break
        chosen.append(int(np.argmax(energy)))
        analog = a[:, chosen]
        digital = np.linalg.pinv(analog) @ f_target
        res = f_target - analog @ digital
        res_norm = np.linalg.norm(res)
        if res_norm <= 1e-13 * target_norm:
            break
        f_res = res / res_norm
    analog = a[:, chosen]
    eff_norms = np.linalg.norm(analog @ digital, axis=0)
    want = np.linalg.norm(f_target, axis=0)
    scale = np.divide(want, eff_norms, out=np.zeros_like(want), where=eff_norms > 0)
    return HybridBeamformer(analog.astype(complex), digital * scale)


def _quantized(bf, phase_bits):
    if phase_bits is None:
        return bf
    return HybridBeamformer(quantize_phases(bf.analog, phase_bits), bf.digital)


def _peer_beamformers(h_ki, h_ij, ns, power):
    return eigen_precoder(h_ki, ns, power), eigen_combiner(h_ij, ns)


def design_eigen_only(h_ki, h_ij, ns, power="stream", codebook=None, nrf=None, rx_codebook=None):
    """Unprojected eigen-beamformers at the FD node (no SI handling).

    With a codebook, both beamformers are OMP hybrid approximations using
    ``nrf`` RF chains; otherwise they are realized exactly. ``rx_codebook``
    defaults to ``codebook``.
    """
    w = eigen_combiner(h_ki, ns)
    f = eigen_precoder(h_ij, ns, power)
    if codebook is None:
        comb, prec = exact_hybrid_decomposition(w), exact_hybrid_decomposition(f)
    else:
        comb = omp_hybrid_approx(w, codebook if rx_codebook is None else rx_codebook, nrf)
        prec = omp_hybrid_approx(f, codebook, nrf)
        prec = _renormalize(prec, f.shape[0], power)
    f_k, w_j = _peer_beamformers(h_ki, h_ij, ns, power)
    return BfcDesign(prec, comb, f_k, w_j, DesignCase.EIGEN_ONLY)


def _renormalize(bf, nt, power):
    # rescale the digital stage so the effective precoder meets the power constraint
    norms = np.linalg.norm(bf.effective, axis=0)
    if power == "total":
        total = np.linalg.norm(norms)
        scale = np.sqrt(nt) / total if total > 0 else 0.0
    else:
        scale = np.divide(np.sqrt(nt), norms, out=np.zeros_like(norms), where=norms > 0)
    return HybridBeamformer(bf.analog, bf.digital * scale)


def design_case_a(h_ki, h_ij, h_ii, ns, power="stream", phase_bits=None):
    """BFC with ``Nrf = 2 Ns`` and infinite-resolution phase shifters.

    The combiner is the ``k -> i`` eigen-combiner. The ``i -> j``
    eigen-precoder is projected onto the null space of the effective SI
    channel ``W^H H_ii`` and renormalized, then both are decomposed exactly.
    ``phase_bits`` optionally quantizes the analog stages afterwards, which
    breaks exact nulling and is meant only for sensitivity studies.
    """
    h_ii = _as_array(h_ii)
    nt = h_ii.shape[1]
    w = eigen_combiner(h_ki, ns)
    basis = null_space_basis(w.conj().T @ h_ii)
    if basis.shape[1] == 0:
        raise DesignInfeasibleError("effective SI channel has an empty null space")
    v = eigen_precoder(h_ij, ns, power)
    projected = project_onto(basis, v)
    notes = []
    norms = np.linalg.norm(projected, axis=0)
    degenerate = bool(np.any(norms < 1e-12 * np.sqrt(nt)))
    if degenerate:
        notes.append("projected precoder has a vanishing stream")
        projected[:, norms < 1e-12 * np.sqrt(nt)] = 0
    f = normalize_columns(projected, nt, power)
    prec = _quantized(exact_hybrid_decomposition(f), phase_bits)
    comb = _quantized(exact_hybrid_decomposition(w), phase_bits)
    if phase_bits is not None:
        prec = _renormalize(prec, nt, power)
    f_k, w_j = _peer_beamformers(h_ki, h_ij, ns, power)
    return BfcDesign(prec, comb, f_k, w_j, DesignCase.CASE_A, degenerate, notes)


def design_case_b(h_ki, h_ij, h_ii, ns, nrf, codebook, power="stream", rx_codebook=None):
    """BFC with ``Ns <= Nrf < 2 Ns`` and codebook-constrained analog beams.

    Both the combiner and the eigen-precoder are OMP-approximated. The
    analog precoder is then frozen and the digital precoder is projected
    onto the null space of ``W_BB^H W_RF^H H_ii F_RF``. If that null space
    is empty the design is flagged degenerate and transmits nothing.
    ``rx_codebook`` (default: ``codebook``) is used for the combiner.
    """
    h_ii = _as_array(h_ii)
    nt = h_ii.shape[1]
    if not ns <= nrf < 2 * ns:
        warnings.warn(f"case B expects Ns <= Nrf < 2Ns, got Ns={ns}, Nrf={nrf}", stacklevel=2)
    rx_codebook = codebook if rx_codebook is None else rx_codebook
    comb = omp_hybrid_approx(eigen_combiner(h_ki, ns), rx_codebook, nrf)
    x = omp_hybrid_approx(eigen_precoder(h_ij, ns, power), codebook, nrf)
    eff_si = comb.effective.conj().T @ h_ii @ x.analog
    c = null_space_basis(eff_si)
    f_k, w_j = _peer_beamformers(h_ki, h_ij, ns, power)
    notes = []
    if c.shape[1] == 0:
        notes.append("digital null space is empty; link i->j carries no power")
        prec = HybridBeamformer(x.analog, np.zeros_like(x.digital))
        return BfcDesign(prec, comb, f_k, w_j, DesignCase.CASE_B, True, notes)
    f_bb = project_onto(c, x.digital)
    eff_norms = np.linalg.norm(x.analog @ f_bb, axis=0)
    degenerate = bool(np.any(eff_norms < 1e-12 * np.sqrt(nt)))
    if degenerate:
        notes.append("projected precoder has a vanishing stream")
        f_bb[:, eff_norms < 1e-12 * np.sqrt(nt)] = 0
    prec = _renormalize(HybridBeamformer(x.analog, f_bb), nt, power)
    return BfcDesign(prec, comb, f_k, w_j, DesignCase.CASE_B, degenerate, notes)
