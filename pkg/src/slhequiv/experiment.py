"""Convergence experiments: distance between equivalent sequences along an index list."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .families import (
    Equivalence,
    FaradaySpec,
    LANSpec,
    SqueezingSpec,
    faraday_family,
    lan_family,
    squeezing_family,
)
from .oracle import SliceConfig, oracle_distance
from .semigroup import ExponentialState, distance
from .slh import delta_residual

CSV_HEADER = ("k", "distance", "delta_residual", "oracle_value", "oracle_error")


def default_state(n: int, d: int, t: float) -> ExponentialState:
    """Uniform superposition ``v`` and a single segment with ``alpha = (1, ..., 1)/sqrt(n)``."""
    return ExponentialState.constant(np.ones(d) / np.sqrt(d), np.ones(n) / np.sqrt(n), t)


def sequence(spec) -> Callable[[float], Equivalence]:
    """Index -> equivalence pair for one of the family specs."""
    if isinstance(spec, SqueezingSpec):
        return lambda k: squeezing_family(spec.at(k))
    if isinstance(spec, FaradaySpec):
        return lambda k: faraday_family(spec.at(k))
    if isinstance(spec, LANSpec):
        return lambda k: lan_family(spec.at(k))
    if callable(spec):
        return spec
    raise TypeError(f"no sequence for {type(spec).__name__}")


def max_workers() -> int:
    cap = os.environ.get("SLH_NUM_THREADS")
    if cap:
        return max(1, int(cap))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class ReportRow:
    k: float
    distance: float
    delta_residual: float
    oracle_value: Optional[float] = None
    oracle_error: Optional[float] = None


@dataclass
class ConvergenceReport:
    rows: list[ReportRow]
    metadata: dict = field(default_factory=dict)

    @property
    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.rows])

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.rows])

    @property
    def delta_residuals(self) -> np.ndarray:
        return np.array([r.delta_residual for r in self.rows])

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.distances) < 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([_fmt(r.k), _fmt(r.distance), _fmt(r.delta_residual), _fmt(r.oracle_value), _fmt(r.oracle_error)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


def convergence_experiment(
    family,
    ks: Sequence[float],
    psi: ExponentialState,
    t: float,
    oracle: Optional[SliceConfig] = None,
    name: str = "",
    workers: Optional[int] = None,
) -> ConvergenceReport:
    """Evaluate ``||(U_G(t) - U_G~(t)) psi||`` for each index in ``ks``.

    With ``oracle`` set, the smallest index is also run through the
    collision-model validator.
    """
    ks = [float(k) for k in ks]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be a non-empty increasing list")
    build = sequence(family)

    def one(k):
        eq = build(k)
        return ReportRow(k, distance(eq.G_tilde, eq.G, psi, t), delta_residual(eq.delta))

    with ThreadPoolExecutor(max_workers=workers or max_workers()) as pool:
        rows = list(pool.map(one, ks))
    if oracle is not None:
        eq = build(ks[0])
        rows[0].oracle_value, rows[0].oracle_error = oracle_distance(eq.G_tilde, eq.G, psi, t, oracle)
    meta = {"family": name, "t": t, "state": psi.to_json(), "ks": ks}
    if oracle is not None:
        meta["oracle"] = {"dt": oracle.dt, "d_noise": oracle.d_noise, "scheme": oracle.scheme}
    return ConvergenceReport(rows, meta)
