"""Link metrics: SINR, DVB-S2X MODCOD efficiency, SMSE and their checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "ModcodRow", "ModcodTable", "load_modcod_table", "default_modcod_table",
    "sinr", "to_db", "modcod_efficiency", "per_user_mse",
    "SmsePair", "smse", "SmseOrderCheck", "verify_theorem1",
    "interlacing_chain", "check_interlacing", "spectral_efficiency_summary",
    "SMSE_PREFACTOR_NOTE",
]

SMSE_PREFACTOR_NOTE = (
    "SMSE reported as sum_i 1/(G/P + lambda_i) with no leading factor; "
    "alternative K/P or K/G prefactors scale both values identically"
)


@dataclass(frozen=True)
class ModcodRow:
    mode: str
    efficiency_bps: float
    required_sinr_db: float


class ModcodTable:
    """SINR to spectral-efficiency lookup.

    A SINR selects the most efficient mode whose required SINR it meets.
    Below the most robust mode the link is in outage (efficiency 0).
    """

    def __init__(self, rows: Iterable[ModcodRow]):
        self.rows = tuple(sorted(rows, key=lambda r: (r.required_sinr_db, -r.efficiency_bps)))
        if not self.rows:
            raise ValueError("empty MODCOD table")
        self._thresholds = np.array([r.required_sinr_db for r in self.rows])
        self._best = np.maximum.accumulate([r.efficiency_bps for r in self.rows])
        self._by_mode = {r.mode: r for r in self.rows}

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, mode: str) -> ModcodRow:
        return self._by_mode[mode]

    def efficiency(self, sinr_db):
        x = np.asarray(sinr_db, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("SINR must be finite")
        idx = np.searchsorted(self._thresholds, x, side="right") - 1
        out = np.where(idx >= 0, self._best[np.clip(idx, 0, None)], 0.0)
        return float(out) if out.ndim == 0 else out

    def mode_for(self, sinr_db: float) -> Optional[ModcodRow]:
        """Row selected at ``sinr_db`` (None in outage)."""
        best = None
        for r in self.rows:
            if r.required_sinr_db <= sinr_db and (best is None or r.efficiency_bps > best.efficiency_bps):
                best = r
        return best

    def frontier(self) -> list:
        """Rows that some SINR actually selects (not dominated by a cheaper mode)."""
        return [r for r in self.rows if self.efficiency(r.required_sinr_db) == r.efficiency_bps]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "efficiency_bps", "required_sinr_db"])
        for r in self.rows:
            w.writerow([r.mode, f"{r.efficiency_bps:.3f}", f"{r.required_sinr_db:.2f}"])
        return buf.getvalue()


def _parse_modcod(text: str) -> ModcodTable:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["mode", "efficiency_bps", "required_sinr_db"]:
        raise ValueError(f"unexpected MODCOD columns {reader.fieldnames}")
    return ModcodTable(ModcodRow(row["mode"], float(row["efficiency_bps"]), float(row["required_sinr_db"]))
                       for row in reader)


def load_modcod_table(path=None) -> ModcodTable:
    """Read a ``mode,efficiency_bps,required_sinr_db`` CSV (bundled DVB-S2X table by default)."""
    if path is None:
        text = resources.files("mgprecoding").joinpath("data/modcod_dvbs2x.csv").read_text()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    return _parse_modcod(text)


_DEFAULT_TABLE: Optional[ModcodTable] = None


def default_modcod_table() -> ModcodTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_modcod_table()
    return _DEFAULT_TABLE


def modcod_efficiency(sinr_db, table: Optional[ModcodTable] = None):
    return (table or default_modcod_table()).efficiency(sinr_db)


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


def sinr(H: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Per-user SINR (linear) with unit noise power.

    ``SINR_k = |(HT)_kk|^2 / (sum_{j != k} |(HT)_kj|^2 + 1)``
    """
    HT = np.asarray(H) @ np.asarray(T)
    p = np.abs(HT) ** 2
    signal = np.diag(p).copy()
    interference = p.sum(axis=1) - signal
    return signal / (interference + 1.0)


def per_user_mse(sinr_lin: np.ndarray) -> np.ndarray:
    """MSE of each user under a scalar MMSE receiver, ``1 / (1 + SINR)``."""
    return 1.0 / (1.0 + np.asarray(sinr_lin))


@dataclass(frozen=True)
class SmsePair:
    smse_no_interference: float
    smse_interference: float
    eig_no_interference: np.ndarray
    eig_interference: np.ndarray
    note: str = SMSE_PREFACTOR_NOTE


def _gram_eigs(A: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(A @ A.conj().T)
    return np.clip(w, 0.0, None)[::-1]


def smse(H_u: np.ndarray, H_f: Optional[np.ndarray], G: int, P: float) -> SmsePair:
    """Sum MSE with and without the feeder coupling ``H_f`` (eigenvalue form)."""
    if P <= 0:
        raise ValueError("power must be positive")
    H_u = np.asarray(H_u)
    reg = G / P
    lam0 = _gram_eigs(H_u)
    lam1 = lam0 if H_f is None else _gram_eigs(H_u @ np.asarray(H_f))
    s0 = math.fsum(np.sort(1.0 / (reg + lam0)))
    s1 = math.fsum(np.sort(1.0 / (reg + lam1)))
    return SmsePair(s0, s1, lam0, lam1)


@dataclass(frozen=True)
class SmseOrderCheck:
    holds: bool
    margin: float
    pair: SmsePair


def verify_theorem1(H_u, H_f, G: int, P: float, tol: float = 1e-9) -> SmseOrderCheck:
    """Check ``SMSE_interference >= SMSE_no-interference`` up to ``-tol``."""
    pair = smse(H_u, H_f, G, P)
    margin = pair.smse_interference - pair.smse_no_interference
    return SmseOrderCheck(bool(margin >= -tol), float(margin), pair)


def interlacing_chain(D: np.ndarray, r: int) -> np.ndarray:
    """Interleaved singular values s1(D_{r+1}), s1(D_r), s2(D_{r+1}), ..., s_{r+1}(D_{r+1}).

    ``D_r`` keeps the first ``r`` columns of ``D``.
    """
    D = np.asarray(D)
    big = np.linalg.svd(D[:, : r + 1], compute_uv=False)
    small = np.linalg.svd(D[:, :r], compute_uv=False)
    chain = np.empty(2 * r + 1)
    chain[0::2] = big[: r + 1]
    chain[1::2] = small[:r]
    return chain


def check_interlacing(D: np.ndarray, r: Optional[int] = None, rtol: float = 1e-10) -> bool:
    """Verify the column-deletion interlacing chain for one ``r`` or all of them.

    ``D`` must be tall (rows >= columns) for the chain to have ``2r+1`` terms.
    """
    D = np.asarray(D)
    rows, k = D.shape
    if rows < k:
        raise ValueError("D must be tall")
    rs = range(1, k) if r is None else [r]
    s1 = np.linalg.svd(D, compute_uv=False)[0] if D.size else 0.0
    tol = rtol * s1
    for rr in rs:
        if not 1 <= rr < k:
            raise ValueError(f"r must satisfy 1 <= r < {k}")
        chain = interlacing_chain(D, rr)
        if np.any(np.diff(chain) > tol):
            return False
    return True


def _percentile(sorted_vals: np.ndarray, q: float) -> float:
    return float(np.percentile(sorted_vals, q))


def spectral_efficiency_summary(per_drop: Sequence[Sequence[float]]) -> dict:
    """Order-independent statistics of per-user and per-drop sum efficiency.

    Values are sorted before reduction and summed with :func:`math.fsum`, so
    the result does not depend on the order drops are supplied in.
    """
    drops = [np.asarray(d, dtype=float) for d in per_drop]
    if not drops:
        raise ValueError("need at least one drop")
    users = np.sort(np.concatenate(drops))
    sums = np.sort(np.array([math.fsum(np.sort(d)) for d in drops]))

    def stats(v):
        return {
            "mean": math.fsum(v) / v.size,
            "median": _percentile(v, 50),
            "p5": _percentile(v, 5),
            "p95": _percentile(v, 95),
        }

    return {"num_drops": len(drops), "per_user": stats(users), "sum": stats(sums)}
