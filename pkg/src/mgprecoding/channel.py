"""User-link channel synthesis for a multigateway multibeam satellite.

The forward user link is modelled as ``H = D W`` where ``D`` carries the
per-beam rain fade and ``W`` the feed radiation pattern, free-space loss,
user antenna gain and noise normalization. Beams sit on a hexagonal grid
and are grouped in 7-beam clusters (one centre cell plus its ring), one
cluster per gateway.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import Boltzmann, speed_of_light
from scipy.special import jv

__all__ = [
    "ClusterLayout", "GeometryConfig", "RainFadingModel", "ChannelMatrix",
    "Coverage", "build_coverage", "feed_gain", "bessel_field", "w_entry",
    "sample_rain", "place_users", "radiation_matrix", "assemble_channel",
    "BESSEL_U_3DB", "BESSEL_FIRST_NULL",
]

# u at which the tapered-aperture pattern is 3 dB below peak
BESSEL_U_3DB = 2.07123
# first root of J1(u)/(2u) + 36 J3(u)/u^3
BESSEL_FIRST_NULL = 5.907241663449531


@dataclass(frozen=True)
class ClusterLayout:
    """Assignment of beams to clusters and of feeds to gateways.

    Cluster ``g`` is served by gateway ``g``. Feed ranges must be contiguous
    and ordered, beam sets only need to be disjoint.
    """

    num_beams: int
    num_feeds: int
    beams_of_cluster: tuple
    feeds_of_gateway: tuple
    # cluster adjacency as a tuple of frozensets; None means index neighbours
    adjacency: Optional[tuple] = field(default=None, compare=False)
    # cluster centre positions (deg); used to rank cooperation partners
    cluster_centers: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        beams = tuple(tuple(int(b) for b in c) for c in self.beams_of_cluster)
        feeds = tuple(range(r.start, r.stop) if isinstance(r, range) else range(int(r[0]), int(r[1]))
                      for r in self.feeds_of_gateway)
        object.__setattr__(self, "beams_of_cluster", beams)
        object.__setattr__(self, "feeds_of_gateway", feeds)
        if self.num_beams < 1 or self.num_feeds < 1:
            raise ValueError("num_beams and num_feeds must be positive")
        if len(beams) != len(feeds) or not beams:
            raise ValueError("need one beam set and one feed range per gateway")
        all_beams = sorted(b for c in beams for b in c)
        if all_beams != list(range(self.num_beams)):
            raise ValueError("beam sets must be disjoint and cover 0..K-1")
        start = 0
        for r in feeds:
            if r.start != start or r.step != 1 or len(r) == 0:
                raise ValueError("feed ranges must be contiguous, ordered and non-empty")
            start = r.stop
        if start != self.num_feeds:
            raise ValueError("feed ranges must cover 0..N-1")
        for g, (c, r) in enumerate(zip(beams, feeds)):
            if len(c) > len(r):
                raise ValueError(f"gateway {g}: K_g={len(c)} exceeds N_g={len(r)}")

    @classmethod
    def uniform(cls, num_gateways: int, beams_per_cluster: int, feeds_per_gateway: int) -> "ClusterLayout":
        G, Kg, Ng = num_gateways, beams_per_cluster, feeds_per_gateway
        return cls(
            num_beams=G * Kg,
            num_feeds=G * Ng,
            beams_of_cluster=tuple(tuple(range(g * Kg, (g + 1) * Kg)) for g in range(G)),
            feeds_of_gateway=tuple(range(g * Ng, (g + 1) * Ng) for g in range(G)),
        )

    @property
    def num_gateways(self) -> int:
        return len(self.beams_of_cluster)

    @property
    def beams_per_cluster(self) -> tuple:
        return tuple(len(c) for c in self.beams_of_cluster)

    @property
    def feeds_per_gateway(self) -> tuple:
        return tuple(len(r) for r in self.feeds_of_gateway)

    def beam_index(self, g: int) -> np.ndarray:
        return np.asarray(self.beams_of_cluster[g], dtype=int)

    def feed_slice(self, g: int) -> slice:
        r = self.feeds_of_gateway[g]
        return slice(r.start, r.stop)

    def cluster_of_beam(self) -> np.ndarray:
        out = np.empty(self.num_beams, dtype=int)
        for g, c in enumerate(self.beams_of_cluster):
            out[list(c)] = g
        return out

    def neighbours(self, g: int) -> frozenset:
        if self.adjacency is not None:
            return frozenset(self.adjacency[g])
        return frozenset(c for c in (g - 1, g + 1) if 0 <= c < self.num_gateways)

    def nearest_clusters(self, g: int) -> list:
        """Other clusters ordered by centre distance to ``g`` (ties by index)."""
        others = [c for c in range(self.num_gateways) if c != g]
        if self.cluster_centers is None:
            return sorted(others, key=lambda c: (abs(c - g), c))
        centers = np.asarray(self.cluster_centers, dtype=float)
        dist = {c: round(float(np.hypot(*(centers[c] - centers[g]))), 9) for c in others}
        return sorted(others, key=lambda c: (dist[c], c))


@dataclass(frozen=True)
class GeometryConfig:
    """Satellite, coverage and RF parameters of the user link.

    Angles are degrees, distances km unless the name says otherwise. The
    default noise temperature follows from a 41.7 dBi terminal with a
    clear-sky G/T of 17.68 dB/K.
    """

    satellite_longitude_deg: float = 10.0
    satellite_latitude_deg: float = 0.0
    altitude_km: float = 35786.0
    earth_radius_km: float = 6378.137
    coverage_latitude_deg: float = 30.0
    coverage_longitude_deg: float = 10.0
    num_beams: int = 21
    cluster_size: int = 7
    grid_spacing_deg: float = 0.5
    feeds_per_beam: float = 1.5
    carrier_hz: float = 20e9
    bandwidth_hz: float = 500e6
    noise_temp_k: float = 252.35
    user_gain_dbi: float = 41.7
    feed_peak_gain_dbi: float = 60.0
    feed_theta_3db_deg: float = 0.35
    focal_length_m: float = 1.0

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_hz


@dataclass(frozen=True)
class RainFadingModel:
    """Gaussian rain attenuation in dB, clipped at 0 dB."""

    mean_db: float = -2.6
    sigma_db: float = 1.63
    clear_sky: bool = False

    def __post_init__(self):
        if self.sigma_db < 0:
            raise ValueError("sigma_db must be non-negative")


@dataclass(frozen=True)
class ChannelMatrix:
    """K x N complex user-link channel with its cluster layout."""

    entries: np.ndarray
    layout: ClusterLayout

    def __post_init__(self):
        shape = (self.layout.num_beams, self.layout.num_feeds)
        if self.entries.shape != shape:
            raise ValueError(f"channel shape {self.entries.shape} does not match layout {shape}")

    def gateway_block(self, g: int) -> np.ndarray:
        """Columns of the feeds owned by gateway ``g`` (K x N_g)."""
        return self.entries[:, self.layout.feed_slice(g)]

    def cluster_block(self, g: int, c: int) -> np.ndarray:
        """Effect of gateway ``g``'s feeds on cluster ``c`` (K_c x N_g)."""
        return self.entries[self.layout.beam_index(c)][:, self.layout.feed_slice(g)]

    def with_entries(self, entries: np.ndarray) -> "ChannelMatrix":
        return ChannelMatrix(np.asarray(entries, dtype=complex), self.layout)


# ---------------------------------------------------------------------------
# hexagonal coverage
# ---------------------------------------------------------------------------
_HEX_DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def _axial_to_xy(q, r, spacing):
    return spacing * (q + r / 2.0), spacing * (math.sqrt(3.0) / 2.0) * r


def _spiral_key(q, r):
    x, y = _axial_to_xy(q, r, 1.0)
    return (round(math.hypot(x, y), 9), round(math.atan2(y, x) % (2 * math.pi), 9))


def _hex_clusters(num_beams: int, cluster_size: int):
    if cluster_size != 7:
        raise ValueError("only 7-beam hexagonal clusters are supported")
    G = num_beams // cluster_size
    extra = num_beams - G * cluster_size
    if G < 1 or extra >= G and extra:
        raise ValueError(f"cannot split {num_beams} beams into clusters of {cluster_size}")
    # cluster centres on the 7-cell tiling lattice, spiral order from the origin
    span = 2 * int(math.ceil(math.sqrt(G))) + 2
    lattice = [(2 * m - n, m + 3 * n) for m in range(-span, span + 1) for n in range(-span, span + 1)]
    lattice.sort(key=lambda p: _spiral_key(*p))
    centres = lattice[:G]
    clusters = [[c] + [(c[0] + dq, c[1] + dr) for dq, dr in _HEX_DIRS] for c in centres]
    # leftover beams go to the outermost clusters, one free neighbouring cell each
    used = {cell for cl in clusters for cell in cl}
    for g in range(G - extra, G):
        free = {(q + dq, r + dr) for q, r in clusters[g] for dq, dr in _HEX_DIRS} - used
        cell = max(free, key=lambda p: (_spiral_key(*p)[0], -_spiral_key(*p)[1]))
        clusters[g].append(cell)
        used.add(cell)
    cell_owner = {cell: g for g, cl in enumerate(clusters) for cell in cl}
    adjacency = []
    for g, cl in enumerate(clusters):
        adj = {cell_owner[(q + dq, r + dr)] for q, r in cl for dq, dr in _HEX_DIRS
               if (q + dq, r + dr) in cell_owner}
        adj.discard(g)
        adjacency.append(frozenset(adj))
    return clusters, centres, tuple(adjacency)


def _feed_cells(cluster_xy: np.ndarray, num_feeds: int) -> np.ndarray:
    """Feed boresights: beam centres, then centre-ring and ring-ring midpoints."""
    centre, ring = cluster_xy[0], cluster_xy[1:7]
    extras = [cluster_xy[7:]] if len(cluster_xy) > 7 else []
    mids_cr = [(centre + p) / 2 for p in ring]
    mids_rr = [(ring[i] + ring[(i + 1) % 6]) / 2 for i in range(6)]
    candidates = np.vstack([cluster_xy[:7], *extras, np.array(mids_cr), np.array(mids_rr)])
    if num_feeds > len(candidates):
        raise ValueError(f"at most {len(candidates)} feeds per cluster are supported")
    return candidates[:num_feeds]


@dataclass(frozen=True)
class Coverage:
    """Resolved geometry: layout, beam centres and feed boresights (deg)."""

    geometry: GeometryConfig
    layout: ClusterLayout
    beam_centers: np.ndarray
    feed_boresights: np.ndarray
    sat_position: np.ndarray
    boresight: np.ndarray
    east: np.ndarray
    north: np.ndarray

    def directions(self, xy_deg: np.ndarray) -> np.ndarray:
        """Unit pointing vectors for angular offsets from the coverage centre."""
        t = np.tan(np.radians(np.atleast_2d(xy_deg)))
        d = self.boresight + t[:, :1] * self.east + t[:, 1:2] * self.north
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    def slant_ranges(self, xy_deg: np.ndarray) -> np.ndarray:
        """Satellite-to-ground distance (km) along each pointing direction."""
        d = self.directions(xy_deg)
        s = self.sat_position
        R = self.geometry.earth_radius_km
        b = d @ s
        disc = b ** 2 - (s @ s - R ** 2)
        if np.any(disc < 0):
            raise ValueError("pointing direction misses the Earth")
        return -b - np.sqrt(disc)


def _ecef(lat_deg, lon_deg, radius):
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    return radius * np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])


@functools.lru_cache(maxsize=32)
def build_coverage(geometry: GeometryConfig) -> Coverage:
    clusters, centres, adjacency = _hex_clusters(geometry.num_beams, geometry.cluster_size)
    sp = geometry.grid_spacing_deg
    beam_xy = []
    beams_of_cluster, feeds_of_gateway, feed_xy = [], [], []
    n0 = 0
    for cl in clusters:
        xy = np.array([_axial_to_xy(q, r, sp) for q, r in cl])
        beams_of_cluster.append(tuple(range(len(beam_xy), len(beam_xy) + len(cl))))
        beam_xy.extend(xy)
        ng = int(math.floor(geometry.feeds_per_beam * len(cl) + 0.5))
        ng = max(ng, len(cl))
        feed_xy.append(_feed_cells(xy, ng))
        feeds_of_gateway.append(range(n0, n0 + ng))
        n0 += ng
    layout = ClusterLayout(
        num_beams=len(beam_xy),
        num_feeds=n0,
        beams_of_cluster=tuple(beams_of_cluster),
        feeds_of_gateway=tuple(feeds_of_gateway),
        adjacency=adjacency,
        cluster_centers=tuple(_axial_to_xy(q, r, sp) for q, r in centres),
    )

    R = geometry.earth_radius_km
    sat = _ecef(geometry.satellite_latitude_deg, geometry.satellite_longitude_deg, R + geometry.altitude_km)
    target = _ecef(geometry.coverage_latitude_deg, geometry.coverage_longitude_deg, R)
    bore = (target - sat) / np.linalg.norm(target - sat)
    east = np.cross(np.array([0.0, 0.0, 1.0]), bore)
    east /= np.linalg.norm(east)
    north = np.cross(bore, east)
    for arr in (sat, bore, east, north):
        arr.setflags(write=False)
    beams = np.array(beam_xy)
    feeds = np.vstack(feed_xy)
    beams.setflags(write=False)
    feeds.setflags(write=False)
    return Coverage(geometry, layout, beams, feeds, sat, bore, east, north)


# ---------------------------------------------------------------------------
# per-entry channel model
# ---------------------------------------------------------------------------
def bessel_field(theta_rad, theta_3db_rad):
    """Normalized field amplitude of the tapered-aperture pattern (1 at boresight)."""
    theta = np.asarray(theta_rad, dtype=float)
    u = BESSEL_U_3DB * np.sin(theta) / np.sin(theta_3db_rad)
    small = np.abs(u) < 1e-6
    us = np.where(small, 1.0, u)
    f = jv(1, us) / (2 * us) + 36.0 * jv(3, us) / us ** 3
    return np.where(small, 1.0, f)


def feed_gain(off_axis_rad, peak_gain_dbi: float, theta_3db_deg: float, phase_rad=0.0):
    """Complex feed gain ``g_kn`` for a given off-axis angle.

    ``|g|^2`` is the linear power gain, so ``10 log10 |g|^2`` is the gain in
    dBi. The pattern is rotationally symmetric about the feed boresight.
    """
    amp = math.sqrt(10 ** (peak_gain_dbi / 10)) * bessel_field(off_axis_rad, math.radians(theta_3db_deg))
    return amp * np.exp(1j * np.asarray(phase_rad))


def w_entry(g_kn, d_k, wavelength, noise_temp_k, bandwidth_hz, user_amp):
    """Noise-normalized link gain ``w_kn``.

    ``d_k`` and ``wavelength`` must share units. ``user_amp`` is the amplitude
    gain ``W_R`` (square root of the terminal power gain).
    """
    d_k = np.asarray(d_k, dtype=float)
    if np.any(d_k <= 0) or wavelength <= 0:
        raise ValueError("distance and wavelength must be positive")
    if noise_temp_k <= 0 or bandwidth_hz <= 0:
        raise ValueError("noise temperature and bandwidth must be positive")
    return user_amp * np.asarray(g_kn) / (4 * np.pi * (d_k / wavelength) * np.sqrt(Boltzmann * noise_temp_k * bandwidth_hz))


def sample_rain(model: RainFadingModel, num_beams: int, rng: np.random.Generator) -> np.ndarray:
    """Linear attenuation per beam, always >= 1."""
    if model.clear_sky:
        return np.ones(num_beams)
    a_db = np.maximum(rng.normal(model.mean_db, model.sigma_db, size=num_beams), 0.0)
    return 10 ** (a_db / 10)


def place_users(coverage: Coverage, rng: np.random.Generator) -> np.ndarray:
    """One user per beam, uniform over a disc of the hexagon circumradius."""
    K = coverage.layout.num_beams
    radius = coverage.geometry.grid_spacing_deg / math.sqrt(3.0)
    rho = radius * np.sqrt(rng.uniform(size=K))
    phi = rng.uniform(0.0, 2 * np.pi, size=K)
    return coverage.beam_centers + np.column_stack([rho * np.cos(phi), rho * np.sin(phi)])


def radiation_matrix(coverage: Coverage, users_xy: np.ndarray) -> np.ndarray:
    """The K x N matrix ``W`` for the given user positions."""
    geo = coverage.geometry
    lam = geo.wavelength
    u_dir = coverage.directions(users_xy)
    f_dir = coverage.directions(coverage.feed_boresights)
    cross = np.linalg.norm(np.cross(u_dir[:, None, :], f_dir[None, :, :]), axis=2)
    theta = np.arctan2(cross, u_dir @ f_dir.T)
    d_m = coverage.slant_ranges(users_xy) * 1e3
    # far-field path difference of feeds displaced in the focal plane
    offs = geo.focal_length_m * np.tan(np.radians(coverage.feed_boresights))
    disp = offs[:, :1] * coverage.east + offs[:, 1:2] * coverage.north
    path = d_m[:, None] - u_dir @ disp.T
    phase = -2 * np.pi * np.mod(path, lam) / lam
    g = feed_gain(theta, geo.feed_peak_gain_dbi, geo.feed_theta_3db_deg, phase)
    user_amp = math.sqrt(10 ** (geo.user_gain_dbi / 10))
    return w_entry(g, d_m[:, None], lam, geo.noise_temp_k, geo.bandwidth_hz, user_amp)


def assemble_channel(
    geometry: GeometryConfig,
    layout: Optional[ClusterLayout],
    rain: RainFadingModel,
    rng: np.random.Generator,
    rain_rng: Optional[np.random.Generator] = None,
) -> ChannelMatrix:
    """Draw one channel realization ``H = D W``.

    User positions come from ``rng``; the rain draw uses ``rain_rng`` when
    given, otherwise the same generator after placement.
    """
    coverage = build_coverage(geometry)
    if layout is None:
        layout = coverage.layout
    if (layout.num_beams, layout.num_feeds) != (coverage.layout.num_beams, coverage.layout.num_feeds):
        raise ValueError("layout dimensions do not match the geometry")
    users = place_users(coverage, rng)
    W = radiation_matrix(coverage, users)
    A = sample_rain(rain, layout.num_beams, rain_rng if rain_rng is not None else rng)
    return ChannelMatrix(W / np.sqrt(A)[:, None], layout)
