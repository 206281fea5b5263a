"""Gateway cooperation regimes and the CSI each gateway ends up holding.

Gateway ``g`` always knows the channel from every feed to its own users.
What it lacks are the blocks ``H_g^c`` (its feeds to cluster ``c``), which
only gateway ``c`` measures. The schemes below differ in which of those
blocks are shared, and in what form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .channel import ChannelMatrix, ClusterLayout
from .precoder import PrecoderSet, assemble_total, gateway_precoder, icm_precoder, mmse_alpha

__all__ = [
    "Kind", "CooperationScheme", "Full", "RankOne", "Unknown", "CsiView",
    "rank_one_compress", "build_compressed_interference", "effective_csi",
    "precoder_for_view", "scheme_precoder", "reference_precoder",
    "OverheadCount", "overhead_count", "overhead_uniform", "SCENARIOS", "scheme_from_name",
]


class Kind(enum.Enum):
    ICM = "icm"
    GROUP = "group"
    GCM = "gcm"
    LMC = "lmc"
    REF = "ref"


@dataclass(frozen=True)
class CooperationScheme:
    """A cooperation regime.

    For ``Kind.GROUP`` every gateway shares full CSI with itself and its
    ``group_size - 1`` nearest clusters.
    """

    kind: Kind
    group_size: Optional[int] = None

    def __post_init__(self):
        if self.kind is Kind.GROUP and (self.group_size is None or self.group_size < 1):
            raise ValueError("group cooperation needs a positive group_size")

    @property
    def name(self) -> str:
        if self.kind is Kind.GROUP:
            return f"{self.group_size}gc"
        return self.kind.value

    def group_of(self, g: int, layout: ClusterLayout) -> list:
        """Clusters whose full CSI gateway ``g`` holds, in index order."""
        if self.kind in (Kind.ICM, Kind.LMC):
            return [g]
        if self.kind in (Kind.GCM, Kind.REF):
            return list(range(layout.num_gateways))
        size = min(self.group_size, layout.num_gateways)
        return sorted([g] + layout.nearest_clusters(g)[: size - 1])


# scenario numbering used by the experiment runner and CLI
SCENARIOS = {
    1: CooperationScheme(Kind.ICM),
    2: CooperationScheme(Kind.GROUP, 4),
    3: CooperationScheme(Kind.GROUP, 7),
    4: CooperationScheme(Kind.GCM),
    5: CooperationScheme(Kind.REF),
    6: CooperationScheme(Kind.LMC),
}


def scheme_from_name(name: str) -> CooperationScheme:
    name = name.lower()
    for scheme in SCENARIOS.values():
        if scheme.name == name:
            return scheme
    if name.endswith("gc") and name[:-2].isdigit():
        return CooperationScheme(Kind.GROUP, int(name[:-2]))
    raise ValueError(f"unknown cooperation scheme {name!r}")


@dataclass(frozen=True)
class Full:
    matrix: np.ndarray


@dataclass(frozen=True)
class RankOne:
    sigma: float
    v: np.ndarray
    degenerate: bool = False

    @property
    def row(self) -> np.ndarray:
        return (self.sigma * self.v.conj())[None, :]


class _Unknown:
    def __repr__(self):
        return "Unknown"


Unknown = _Unknown()
Block = Union[Full, RankOne, _Unknown]


@dataclass(frozen=True)
class CsiView:
    """What gateway ``gateway`` knows about ``H_g^c`` for each cluster ``c``."""

    gateway: int
    blocks: dict

    def __post_init__(self):
        if not isinstance(self.blocks.get(self.gateway), Full):
            raise ValueError("a gateway always knows its own cluster block")

    def count(self, kind) -> int:
        if kind is Unknown:
            return sum(b is Unknown for b in self.blocks.values())
        return sum(isinstance(b, kind) for b in self.blocks.values())


def rank_one_compress(H: np.ndarray):
    """Leading singular value and right singular vector of ``H``.

    Returns ``RankOne(sigma, v)``; ``sigma * v^H`` summarizes the row space.
    A zero matrix yields ``sigma = 0``, the first canonical vector and
    ``degenerate=True``.
    """
    H = np.asarray(H)
    n = H.shape[1]
    if not np.any(H):
        return RankOne(0.0, np.eye(n, 1, dtype=complex)[:, 0], degenerate=True)
    _, s, vh = np.linalg.svd(H, full_matrices=False)
    return RankOne(float(s[0]), vh[0].conj())


def build_compressed_interference(g: int, pairs: dict, clusters) -> np.ndarray:
    """Stack ``sigma_i v_{g,i}^H`` for each foreign cluster in ``clusters`` (own skipped)."""
    rows = []
    n = None
    for c in sorted(clusters):
        if c == g:
            continue
        if c not in pairs:
            raise KeyError(f"missing rank-one pair for cluster {c}")
        p = pairs[c]
        rows.append(p.row)
        n = p.v.size
    if not rows:
        return np.zeros((0, 0 if n is None else n), dtype=complex)
    return np.vstack(rows)


def effective_csi(scheme: CooperationScheme, g: int, channel: ChannelMatrix) -> CsiView:
    layout = channel.layout
    G = layout.num_gateways
    blocks = {}
    if scheme.kind is Kind.LMC:
        adjacent = layout.neighbours(g)
        for c in range(G):
            if c == g:
                blocks[c] = Full(channel.cluster_block(g, c))
            elif c in adjacent:
                blocks[c] = rank_one_compress(channel.cluster_block(g, c))
            else:
                blocks[c] = Unknown
        return CsiView(g, blocks)
    known = set(scheme.group_of(g, layout))
    for c in range(G):
        blocks[c] = Full(channel.cluster_block(g, c)) if c in known else Unknown
    return CsiView(g, blocks)


def _view_stack(view: CsiView):
    """Known rows in cluster order plus the positions of the own-cluster rows."""
    rows, own = [], None
    start = 0
    for c in sorted(view.blocks):
        b = view.blocks[c]
        if b is Unknown:
            continue
        m = b.matrix if isinstance(b, Full) else b.row
        if c == view.gateway:
            own = np.arange(start, start + m.shape[0])
        rows.append(m)
        start += m.shape[0]
    return np.vstack(rows), own


def precoder_for_view(view: CsiView, P: float, G: int, flavor: str = "mmse",
                      alpha: Optional[float] = None, isolated: bool = False) -> np.ndarray:
    """Precoder block ``T_g`` from whatever CSI the view holds.

    With ``isolated=True`` this is the isolated-cluster precoder on the raw
    own-cluster block; ``alpha`` is then ignored.
    Otherwise the two-stage precoder runs on the stack of known rows,
    rank-one rows entering as ``sigma v^H``.
    """
    if isolated:
        return icm_precoder(view.blocks[view.gateway].matrix, P, G, flavor)
    H_known, own = _view_stack(view)
    T_g, _, _, _ = gateway_precoder(H_known, own, P, G, flavor, alpha)
    return T_g


def reference_precoder(channel: ChannelMatrix, P: float, flavor: str = "mmse") -> np.ndarray:
    """Single-gateway reference: one transmitter, all feeds, pooled power ``P``.

    ZF or LMMSE (regularizer ``K/P``) on the whole channel.
    """
    return icm_precoder(channel.entries, P, 1, flavor)


def scheme_precoder(scheme: CooperationScheme, channel: ChannelMatrix, P: float,
                    flavor: str = "mmse", mmse_reg: str = "gram") -> PrecoderSet:
    """Dispatch a cooperation scheme to per-gateway precoders and assemble ``T``."""
    layout = channel.layout
    G = layout.num_gateways
    isolated = scheme.kind is Kind.ICM
    # the isolated precoder picks its own per-cluster regularizer
    alpha = mmse_alpha(P, G, mmse_reg) if flavor == "mmse" and not isolated else None
    if scheme.kind is Kind.REF:
        T = reference_precoder(channel, P, flavor)
        ref_alpha = channel.layout.num_beams / P if flavor == "mmse" else None
        return PrecoderSet([], [], [T], [], T, flavor, ref_alpha, meta={"scheme": scheme.name})
    blocks = []
    for g in range(G):
        view = effective_csi(scheme, g, channel)
        blocks.append(precoder_for_view(view, P, G, flavor, alpha, isolated=isolated))
    return PrecoderSet([], [], blocks, [], assemble_total(blocks, layout), flavor, alpha,
                       meta={"scheme": scheme.name})


@dataclass(frozen=True)
class OverheadCount:
    per_gateway: tuple
    total: int


def _gateway_overhead(scheme: CooperationScheme, Ng: int, K: int, Kg: int, G: int) -> int:
    if scheme.kind in (Kind.ICM, Kind.REF):
        return 0
    if scheme.kind is Kind.LMC:
        return Ng * (G - 1)
    s = G if scheme.kind is Kind.GCM else min(scheme.group_size, G)
    return Ng * (K - Kg) * s


def overhead_count(scheme: CooperationScheme, layout: ClusterLayout) -> OverheadCount:
    """Complex numbers exchanged between gateways per channel update.

    Full sharing costs ``N_g (K - K_g) s`` for a gateway cooperating with
    ``s`` gateways (``s = G`` under full cooperation); rank-one sharing costs
    ``N_g (G - 1)``. Isolated clusters and the single-gateway reference
    exchange nothing.
    """
    G, K = layout.num_gateways, layout.num_beams
    per = tuple(_gateway_overhead(scheme, layout.feeds_per_gateway[g], K,
                                  layout.beams_per_cluster[g], G) for g in range(G))
    return OverheadCount(per, int(sum(per)))


def overhead_uniform(scheme: CooperationScheme, feeds_per_gateway: int, num_beams: int,
                     beams_per_cluster: int, num_gateways: int) -> OverheadCount:
    """:func:`overhead_count` for identical gateways, from bare parameters.

    The parameters need not describe a realizable layout (``K`` may differ
    from ``G * K_g``).
    """
    for v in (feeds_per_gateway, num_beams, beams_per_cluster, num_gateways):
        if int(v) != v or v < 1:
            raise ValueError("overhead parameters must be positive integers")
    if beams_per_cluster > num_beams:
        raise ValueError("a cluster cannot hold more beams than the system")
    one = _gateway_overhead(scheme, feeds_per_gateway, num_beams, beams_per_cluster, num_gateways)
    return OverheadCount((one,) * num_gateways, one * num_gateways)
