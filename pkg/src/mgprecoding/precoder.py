"""Two-stage multigateway precoding.

Each gateway first projects onto the null space of the regularized
out-of-cluster rows of its channel, which suppresses the interference its
feeds cause to other clusters, and then applies a ZF or LMMSE inner
precoder to the resulting square virtual channel of its own cluster.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelMatrix, ClusterLayout

__all__ = [
    "PrecodingError", "DegenerateNullSpaceWarning", "RegularizedBlock", "PrecoderSet",
    "regularize", "null_projector", "virtual_channel", "inner_zf", "inner_mmse",
    "assemble_gateway_precoder", "icm_precoder", "assemble_total", "gateway_precoder",
    "mmse_alpha", "block_svd_precoder", "NULL_RTOL", "ZF_MAX_COND", "MMSE_REG_MODES",
]

NULL_RTOL = 1e-9
ZF_MAX_COND = 1e12


class PrecodingError(ArithmeticError):
    """Raised when a precoder cannot be formed (singular or degenerate channel)."""


class DegenerateNullSpaceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class RegularizedBlock:
    matrix: np.ndarray          # K x K, H_g H_g^H + (G/P) I
    own_rows: np.ndarray        # indices of the serving cluster's rows
    own: np.ndarray             # K_g x K
    out_of_cluster: np.ndarray  # (K - K_g) x K


@dataclass
class PrecoderSet:
    """Per-gateway precoder blocks and the assembled block-diagonal matrix."""

    inner: list
    projectors: list
    blocks: list
    betas: list
    total: np.ndarray
    flavor: str
    alpha: Optional[float] = None
    meta: dict = field(default_factory=dict)


def regularize(H_g: np.ndarray, G: int, P: float, own_rows) -> RegularizedBlock:
    """Regularized Gram matrix of a gateway's channel, split by cluster rows."""
    if P <= 0:
        raise ValueError("power must be positive")
    H_g = np.asarray(H_g)
    K = H_g.shape[0]
    R = H_g @ H_g.conj().T + (G / P) * np.eye(K)
    own_rows = np.asarray(own_rows, dtype=int)
    mask = np.zeros(K, dtype=bool)
    mask[own_rows] = True
    return RegularizedBlock(R, own_rows, R[own_rows], R[~mask])


def null_projector(wt: np.ndarray, num_streams: int, dim: Optional[int] = None,
                   rtol: float = NULL_RTOL) -> np.ndarray:
    """Orthonormal basis (``dim x num_streams``) of the right null space of ``wt``.

    Singular values below ``rtol * s_max`` count as zero. When the null space
    is larger than ``num_streams`` the right singular vectors with the
    smallest singular values are kept, earlier index first on ties, and a
    :class:`DegenerateNullSpaceWarning` is issued.
    """
    wt = np.asarray(wt)
    if dim is None:
        dim = wt.shape[1]
    if wt.shape[0] == 0:
        return np.eye(dim, num_streams, dtype=complex)
    _, s, vh = np.linalg.svd(wt, full_matrices=True)
    s_full = np.zeros(dim)
    s_full[: s.size] = s
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    null_dim = dim - rank
    if null_dim < num_streams:
        raise PrecodingError(f"null space has dimension {null_dim} < {num_streams}")
    if null_dim > num_streams:
        warnings.warn(f"null space dimension {null_dim} exceeds {num_streams}; truncating",
                      DegenerateNullSpaceWarning, stacklevel=2)
    order = np.argsort(s_full[rank:], kind="stable") + rank
    return vh[order[:num_streams]].conj().T


def virtual_channel(own_rows: np.ndarray, V0: np.ndarray) -> np.ndarray:
    return own_rows @ V0


def inner_zf(H_eq: np.ndarray, max_cond: float = ZF_MAX_COND) -> np.ndarray:
    """Right inverse of the virtual channel.

    Raises :class:`PrecodingError` when the condition number exceeds
    ``max_cond``.
    """
    H_eq = np.asarray(H_eq)
    cond = np.linalg.cond(H_eq)
    if not np.isfinite(cond) or cond > max_cond:
        raise PrecodingError(f"virtual channel is numerically singular (cond={cond:.3e})")
    m, n = H_eq.shape
    if m == n:
        return np.linalg.solve(H_eq, np.eye(m, dtype=complex))
    return H_eq.conj().T @ np.linalg.solve(H_eq @ H_eq.conj().T, np.eye(m, dtype=complex))


def inner_mmse(H_eq: np.ndarray, alpha: float) -> np.ndarray:
    """Regularized inverse ``H^H (H H^H + alpha I)^-1``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    H_eq = np.asarray(H_eq)
    m = H_eq.shape[0]
    gram = H_eq @ H_eq.conj().T + alpha * np.eye(m)
    # gram is Hermitian, so (gram^-1 H)^H = H^H gram^-1
    return np.linalg.solve(gram, H_eq).conj().T


def _normalize(M: np.ndarray, P: float, G: int):
    energy = np.real(np.vdot(M, M))
    if not np.isfinite(energy) or energy <= 0:
        raise PrecodingError("unnormalized precoder has zero norm")
    beta = np.sqrt((P / G) / energy)
    return beta * M, float(beta)


def assemble_gateway_precoder(H_g, V0, W_g, P: float, G: int):
    """``T_g = beta H_g^H V0 W_g`` scaled so that ``Tr(T_g^H T_g) = P/G``."""
    M = np.asarray(H_g).conj().T @ V0 @ W_g
    return _normalize(M, P, G)


MMSE_REG_MODES = ("gram", "standard", "paper_literal")


def mmse_alpha(P: float, G: int, mode: str = "gram") -> float:
    """Inner LMMSE regularizer for the virtual channel.

    The virtual channel is built from the regularized Gram matrix, so its
    Gram matrix scales like the channel to the fourth power. ``"gram"``
    (default) uses ``(G/P)**2`` to match; ``"standard"`` uses ``G/P`` and
    ``"paper_literal"`` uses ``P/G``. All but the last vanish as ``P`` grows.
    """
    if P <= 0:
        raise ValueError("power must be positive")
    if mode == "gram":
        return (G / P) ** 2
    if mode == "standard":
        return G / P
    if mode == "paper_literal":
        return P / G
    raise ValueError(f"unknown mmse_reg mode {mode!r}")


def icm_precoder(H_own: np.ndarray, P: float, G: int, flavor: str = "zf",
                 alpha: Optional[float] = None) -> np.ndarray:
    """Isolated-cluster precoder from the own-cluster block only (K_g x N_g).

    ``flavor="zf"`` is the plain right inverse; ``"mmse"`` adds ``alpha`` to
    the Gram matrix, by default ``K_g G / P`` (users over available power).
    With ``G=1`` and the whole channel this is the single-transmitter
    precoder.
    """
    H_own = np.asarray(H_own)
    Kg = H_own.shape[0]
    if np.linalg.matrix_rank(H_own) < Kg:
        raise PrecodingError("own-cluster block is rank deficient")
    if flavor == "zf":
        W = inner_zf(H_own)
    elif flavor == "mmse":
        W = inner_mmse(H_own, Kg * G / P if alpha is None else alpha)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    T, _ = _normalize(W, P, G)
    return T


def assemble_total(blocks: Sequence[np.ndarray], layout: ClusterLayout) -> np.ndarray:
    """Place per-gateway blocks on the (feeds, beams) diagonal of an N x K matrix."""
    if len(blocks) != layout.num_gateways:
        raise ValueError("need one block per gateway")
    T = np.zeros((layout.num_feeds, layout.num_beams), dtype=complex)
    for g, T_g in enumerate(blocks):
        shape = (layout.feeds_per_gateway[g], layout.beams_per_cluster[g])
        if T_g.shape != shape:
            raise ValueError(f"block {g} has shape {T_g.shape}, expected {shape}")
        rows = np.arange(layout.num_feeds)[layout.feed_slice(g)]
        T[np.ix_(rows, layout.beam_index(g))] = T_g
    return T


def gateway_precoder(H_g: np.ndarray, own_rows, P: float, G: int, flavor: str = "mmse",
                     alpha: Optional[float] = None):
    """Full two-stage precoder for one gateway.

    ``H_g`` holds the rows this gateway knows (all K rows under full
    cooperation) for its N_g feeds; ``own_rows`` marks its cluster.

    Returns ``(T_g, beta_g, V0, W_g)``.
    """
    reg = regularize(H_g, G, P, own_rows)
    Kg = reg.own_rows.size
    V0 = null_projector(reg.out_of_cluster, Kg, dim=reg.matrix.shape[0])
    H_eq = virtual_channel(reg.own, V0)
    if flavor == "zf":
        W = inner_zf(H_eq)
    elif flavor == "mmse":
        W = inner_mmse(H_eq, mmse_alpha(P, G) if alpha is None else alpha)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    T_g, beta = assemble_gateway_precoder(H_g, V0, W, P, G)
    return T_g, beta, V0, W


def block_svd_precoder(channel: ChannelMatrix, P: float, flavor: str = "mmse",
                       mmse_reg: str = "gram") -> PrecoderSet:
    """Full-cooperation precoder for every gateway, assembled block-diagonally."""
    layout = channel.layout
    G = layout.num_gateways
    alpha = mmse_alpha(P, G, mmse_reg) if flavor == "mmse" else None
    inner, projectors, blocks, betas = [], [], [], []
    for g in range(G):
        T_g, beta, V0, W = gateway_precoder(channel.gateway_block(g), layout.beam_index(g),
                                            P, G, flavor, alpha)
        inner.append(W)
        projectors.append(V0)
        blocks.append(T_g)
        betas.append(beta)
    return PrecoderSet(inner, projectors, blocks, betas, assemble_total(blocks, layout), flavor, alpha)
