"""Randomized numerical checks behind the ``verify`` command.

Three suites:

* the SMSE ordering with and without feeder coupling,
* singular-value interlacing under column deletion,
* precoder invariants (null-space residual, ZF residual, power budget) on
  simulated drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ClusterLayout
from .config import ExperimentConfig
from .harness import drop_channel
from .impairments import FeederLinkModel, feeder_matrix
from .metrics import check_interlacing, verify_theorem1
from .precoder import block_svd_precoder, inner_zf, null_projector, regularize, virtual_channel

__all__ = ["CouplingInstance", "random_coupling_instance", "SuiteReport",
           "smse_order_suite", "interlacing_suite", "invariant_suite"]


@dataclass(frozen=True)
class CouplingInstance:
    H_u: np.ndarray
    H_f: np.ndarray
    G: int
    P: float
    rho: float
    num_interferers: int


def random_coupling_instance(rng: np.random.Generator, max_users: int = 20,
                            contractive: bool = False, zero_rho: bool = False) -> CouplingInstance:
    """Random user channel and feeder coupling.

    The coupling has identity diagonal blocks and ``rho^|i-j|`` all-ones
    blocks for the designated pairs. With ``contractive=True`` it is divided
    by its spectral norm, so ``H_f H_f^H <= I``.
    """
    G = int(rng.integers(1, 6))
    Ng = int(rng.integers(1, 5))
    layout = ClusterLayout.uniform(G, 1, Ng)
    N = layout.num_feeds
    K = int(rng.integers(1, max_users + 1))
    H_u = (rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))) / math.sqrt(2)
    H_u *= 10 ** rng.uniform(-1, 1)
    rho = 0.0 if zero_rho else float(rng.uniform(0, 1))
    m = int(rng.integers(0, G))
    H_f = feeder_matrix(FeederLinkModel(rho, m), layout)
    if contractive:
        H_f = H_f / np.linalg.norm(H_f, 2)
    P = float(10 ** rng.uniform(-1, 4))
    return CouplingInstance(H_u, H_f, G, P, rho, m)


@dataclass
class SuiteReport:
    name: str
    total: int = 0
    passed: int = 0
    worst: float = math.inf
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.passed == self.total

    def line(self) -> str:
        return f"{self.passed}/{self.total} {self.name} hold"


def smse_order_suite(instances: int = 1000, seed: int = 0, contractive: bool = False,
                  tol: float = 1e-9, zero_rho_every: int = 10) -> SuiteReport:
    """Check ``SMSE_interference >= SMSE_no-interference`` on random instances.

    Every ``zero_rho_every``-th instance has ``rho = 0``; those must give equal
    values to 1e-12 relative.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    rep = SuiteReport("smse ordering instances")
    for i in range(instances):
        inst = random_coupling_instance(rng, contractive=contractive,
                                       zero_rho=zero_rho_every > 0 and i % zero_rho_every == 0)
        check = verify_theorem1(inst.H_u, inst.H_f, inst.G, inst.P, tol=tol)
        ok = check.holds
        if inst.rho == 0.0 and not contractive:
            a, b = check.pair.smse_no_interference, check.pair.smse_interference
            ok = ok and abs(a - b) <= 1e-12 * abs(a)
        rep.total += 1
        rep.worst = min(rep.worst, check.margin)
        if ok:
            rep.passed += 1
        else:
            rep.failures.append((i, check.margin, inst.rho, inst.num_interferers))
    return rep


def interlacing_suite(matrices: int = 500, seed: int = 0, rtol: float = 1e-10) -> SuiteReport:
    """Column-deletion interlacing on random tall complex matrices, every ``r``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    rep = SuiteReport("interlacing matrices")
    for i in range(matrices):
        k = int(rng.integers(2, 9))
        rows = int(rng.integers(k, k + 8))
        D = rng.standard_normal((rows, k)) + 1j * rng.standard_normal((rows, k))
        rep.total += 1
        if check_interlacing(D, rtol=rtol):
            rep.passed += 1
        else:
            rep.failures.append(i)
    return rep


def invariant_suite(drops: int = 100, seed: int = 0, power_dbw: float = 30.0):
    """Null-space, ZF and power-budget checks on simulated desk-scale drops.

    Returns a dict of :class:`SuiteReport` keyed by ``null_space``,
    ``zf_residual`` and ``power``. The ZF residual is only required on drops
    whose virtual channel has condition number below 1e10.
    """
    cfg = ExperimentConfig(seed=seed, drops=drops)
    P = 10 ** (power_dbw / 10)
    reps = {k: SuiteReport(k) for k in ("null_space", "zf_residual", "power")}
    for d in range(drops):
        ch = drop_channel(cfg, d)
        L = ch.layout
        G = L.num_gateways
        for g in range(G):
            reg = regularize(ch.gateway_block(g), G, P, L.beam_index(g))
            V0 = null_projector(reg.out_of_cluster, reg.own_rows.size, dim=reg.matrix.shape[0])
            r = np.linalg.norm(reg.out_of_cluster @ V0) / np.linalg.norm(reg.out_of_cluster) \
                if reg.out_of_cluster.size else 0.0
            reps["null_space"].total += 1
            reps["null_space"].passed += r <= 1e-9
            reps["null_space"].worst = min(reps["null_space"].worst, -r)
            H_eq = virtual_channel(reg.own, V0)
            if np.linalg.cond(H_eq) < 1e10:
                W = inner_zf(H_eq)
                res = np.linalg.norm(H_eq @ W - np.eye(H_eq.shape[0]))
                reps["zf_residual"].total += 1
                reps["zf_residual"].passed += res <= 1e-8
        for flavor in ("zf", "mmse"):
            ps = block_svd_precoder(ch, P, flavor)
            ok = all(abs(np.real(np.vdot(T, T)) - P / G) <= 1e-10 * P / G for T in ps.blocks)
            ok = ok and abs(np.real(np.vdot(ps.total, ps.total)) - P) <= 1e-10 * P
            reps["power"].total += 1
            reps["power"].passed += bool(ok)
    return reps
