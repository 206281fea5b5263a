"""Feeder-link coupling and limited CSI feedback."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ClusterLayout

__all__ = [
    "FeederLinkModel", "QuantizerSpec", "feeder_matrix", "apply_feeder",
    "quantize_csi", "round_half_away", "feed_subset_limit",
]


@dataclass(frozen=True)
class FeederLinkModel:
    """Coupling between feeder links.

    Gateway ``i`` leaks into gateway ``j`` with amplitude ``rho**|i-j|``
    on every feed, but only for the ``num_interferers`` nearest gateways
    by index (``1 <= |i-j| <= num_interferers``).
    """

    rho: float = 0.0
    num_interferers: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.num_interferers < 0:
            raise ValueError("num_interferers must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return self.rho == 0.0 or self.num_interferers == 0


@dataclass(frozen=True)
class QuantizerSpec:
    """``ddd.dddd`` magnitude and ``aaa.aaaa`` phase (degrees) feedback format."""

    integer_digits: int = 3
    fraction_digits: int = 4
    max_feeds: int = 31

    @property
    def step(self) -> float:
        return 10.0 ** -self.fraction_digits

    @property
    def max_magnitude(self) -> float:
        return 10.0 ** self.integer_digits - self.step


def feeder_matrix(model: FeederLinkModel, layout: ClusterLayout) -> np.ndarray:
    """N x N coupling: identity blocks on the diagonal, ``rho^|i-j|`` all-ones blocks off it."""
    N, G = layout.num_feeds, layout.num_gateways
    H_f = np.eye(N)
    if model.is_ideal:
        return H_f
    for i in range(G):
        for j in range(G):
            d = abs(i - j)
            if 1 <= d <= model.num_interferers:
                H_f[layout.feed_slice(i), layout.feed_slice(j)] = model.rho ** d
    return H_f


def apply_feeder(H_u: np.ndarray, H_f: Optional[np.ndarray]) -> np.ndarray:
    return np.asarray(H_u) if H_f is None else np.asarray(H_u) @ H_f


def round_half_away(x: np.ndarray, digits: int) -> np.ndarray:
    """Round to ``digits`` decimals, ties away from zero."""
    scale = 10.0 ** digits
    return np.sign(x) * np.floor(np.abs(x) * scale + 0.5) / scale


def quantize_csi(H: np.ndarray, spec: QuantizerSpec = QuantizerSpec()) -> np.ndarray:
    """Quantize every entry's magnitude and phase (in degrees) to the feedback grid.

    Magnitudes saturate at ``999.9999``. Phases wrap into ``[0, 360)``
    before rounding and a rounded 360 maps back to 0. The map is idempotent.
    """
    H = np.asarray(H, dtype=complex)
    if not np.all(np.isfinite(H)):
        raise ValueError("CSI entries must be finite")
    d = spec.fraction_digits
    mag = np.minimum(round_half_away(np.abs(H), d), spec.max_magnitude)
    ph = round_half_away(np.mod(np.degrees(np.angle(H)), 360.0), d)
    ph = np.where(ph >= 360.0, 0.0, ph)
    return mag * np.exp(1j * np.radians(ph))


def feed_subset_limit(H: np.ndarray, max_feeds: int = 31) -> np.ndarray:
    """Keep each row's ``max_feeds`` strongest entries; ties favour lower feed index."""
    if max_feeds < 1:
        raise ValueError("max_feeds must be at least 1")
    H = np.asarray(H)
    K, N = H.shape
    if N <= max_feeds:
        return H.copy()
    out = np.zeros_like(H)
    idx = np.arange(N)
    for k in range(K):
        keep = np.lexsort((idx, -np.abs(H[k])))[:max_feeds]
        out[k, keep] = H[k, keep]
    return out
