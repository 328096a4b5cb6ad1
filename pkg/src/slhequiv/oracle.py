"""Repeated-interaction (collision model) validator for the semigroup engine.

Time is cut into slices of length ``dt``. Each slice of the field is a fresh
bosonic mode per channel, truncated to ``d_noise`` Fock levels and prepared in
the slice restriction of the exponential vector, ``sum_m (alpha sqrt(dt))^m / sqrt(m!) |m>``.
A slice interacts once with the system and is then traced out.

Two slice propagators are offered:

``euler-ito``
    ``I + (S - I) (x) b*b + L (x) b* sqrt(dt) - L*S (x) b sqrt(dt) + K dt``,
    the Ito increment of ``dG`` read literally. Not unitary.
``exponential-midpoint``
    ``exp(E (x) b*b + sqrt(dt) (F (x) b* - F* (x) b) + J dt)`` with
    ``E = log S``, ``F = phi(E)^{-1} L`` and ``J = K + F* psi(E) F`` where
    ``phi(x) = (e^x - 1)/x`` and ``psi(x) = (e^x - 1 - x)/x^2``. The exponent is
    anti-Hermitian, so the slice map is exactly unitary, and its ``dt -> 0``
    limit is the QSDE with coefficients ``(S, L, K)``.

Both schemes are first order in ``dt``; :func:`oracle_distance` removes the
leading error by step halving.

Only the system-side reduced cross operator ``tr_env |Phi_b><Phi_a|`` is
propagated, so memory is ``O(d^2)`` regardless of the number of slices.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NumericalBreakdown
from .operators import annihilation, dag, func_of_normal, kron_all, op_norm
from .semigroup import ExponentialState
from .slh import SLHModel, assemble, damping, split_blocks, stack

SCHEMES = ("euler-ito", "exponential-midpoint")
SCHEME_ORDER = {"euler-ito": 1, "exponential-midpoint": 1}


@dataclass(frozen=True)
class SliceConfig:
    dt: float
    d_noise: int = 3
    scheme: str = "exponential-midpoint"
    max_deficit: float | None = None  # bound on relative norm loss; 1e-3 when None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("slice step dt must be positive")
        if self.d_noise < 2:
            raise ValueError("d_noise must be at least 2")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.max_deficit is None:
            object.__setattr__(self, "max_deficit", 1e-3)

    def refined(self, factor: int = 2) -> "SliceConfig":
        return SliceConfig(self.dt / factor, self.d_noise, self.scheme, self.max_deficit)


def default_dt(models, psi: ExponentialState, t: float, budget: float = 0.05) -> float:
    """Largest ``t / N`` with ``(||L||^2 + ||K|| + |alpha|^2) dt <= budget`` that aligns with every segment."""
    rate = 0.0
    for G in models:
        D = damping(G)
        rate = max(rate, op_norm(stack(D.L)) ** 2 + op_norm(D.K))
    rate += max(float(np.vdot(a, a).real) for _, a in psi.segments)
    n0 = max(1, math.ceil(rate * t / budget - 1e-12))
    for N in range(n0, 1000 * n0 + 1):
        if _aligned(psi, t / N):
            return t / N
    raise ValueError("could not find a slice step aligned with the drive segments")


def _aligned(psi: ExponentialState, dt: float) -> bool:
    for t_end, _ in psi.segments:
        m = t_end / dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            return False
    return True


# -- slice operators ------------------------------------------------------------------


def _slice_ladders(n: int, levels: int) -> list[np.ndarray]:
    a = annihilation(levels)
    eye = np.eye(levels)
    return [kron_all([a if k == i else eye for k in range(n)]) for i in range(n)]


def slice_input(alpha, dt: float, levels: int) -> np.ndarray:
    """Truncated slice restriction of ``exp(alpha 1_slice)`` (unnormalised)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    m = np.arange(levels)
    facts = np.sqrt([float(math.factorial(int(k))) for k in m])
    per_channel = [(a * np.sqrt(dt)) ** m / facts for a in alpha]
    return kron_all([c.reshape(-1, 1) for c in per_channel]).reshape(-1)


def _phi(x):
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 + x / 2 + x**2 / 6, np.expm1(safe) / safe)


def _psi(x):
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 0.5 + x / 6 + x**2 / 24, (np.expm1(safe) - safe) / safe**2)


def slice_propagator(G: SLHModel, dt: float, levels: int, scheme: str) -> np.ndarray:
    """Joint system (x) slice propagator, system index outermost."""
    D = damping(G)
    n, d = D.n, D.d
    b = _slice_ladders(n, levels)
    ds = levels**n
    eye_s = np.eye(ds)
    rdt = np.sqrt(dt)
    if scheme == "euler-ito":
        V = np.kron(np.eye(d) + D.K * dt, eye_s)
        for i, j in itertools.product(range(n), repeat=2):
            V = V + np.kron(D.S[i, j] - (i == j) * np.eye(d), dag(b[i]) @ b[j])
        for i in range(n):
            V = V + rdt * np.kron(D.L[i], dag(b[i]))
            LS = sum(dag(D.L[k]) @ D.S[k, i] for k in range(n))
            V = V - rdt * np.kron(LS, b[i])
        return V
    if scheme == "exponential-midpoint":
        S_full = assemble(D.S)
        E_full = func_of_normal(S_full, np.log)
        E_full = 0.5 * (E_full - dag(E_full))
        phi_E = func_of_normal(E_full, _phi)
        F_col = np.linalg.solve(phi_E, stack(D.L))
        F = F_col.reshape(n, d, d)
        J = D.K + dag(F_col) @ func_of_normal(E_full, _psi) @ F_col
        J = 0.5 * (J - dag(J))
        E = split_blocks(E_full, n, d)
        Z = np.kron(J * dt, eye_s)
        for i, j in itertools.product(range(n), repeat=2):
            Z = Z + np.kron(E[i, j], dag(b[i]) @ b[j])
        for i in range(n):
            Z = Z + rdt * (np.kron(F[i], dag(b[i])) - np.kron(dag(F[i]), b[i]))
        return scipy.linalg.expm(Z)
    raise ValueError(f"unknown scheme {scheme!r}")


def _kraus(V: np.ndarray, c: np.ndarray, d: int) -> np.ndarray:
    """Operators ``A_k = (I (x) <k|) V (I (x) |c>)``, shape ``(ds, d, d)``."""
    ds = c.shape[0]
    V4 = V.reshape(d, ds, d, ds)
    return np.einsum("pkqm,m->kpq", V4, c)


def _cross_map(Ka: np.ndarray, Kb: np.ndarray) -> np.ndarray:
    """Column-stacked matrix of ``M -> sum_k Kb_k M Ka_k*``."""
    return sum(np.kron(np.conj(a), b) for a, b in zip(Ka, Kb))


# -- simulation ----------------------------------------------------------------------------


@dataclass
class SliceState:
    """Result of a slice simulation.

    ``reduced`` is ``tr_env |Phi_b><Phi_a|`` on the system (for a single model,
    the unnormalised reduced density operator). ``norms`` holds the squared norm
    after every slice, relative to ``||psi||^2`` (cross runs record the real
    part of the running overlap instead).
    """

    reduced: np.ndarray
    norms: np.ndarray
    steps: int

    @property
    def value(self) -> complex:
        return complex(np.trace(self.reduced))

    def write_diagnostics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "relative_norm_sq", "deficit"])
            for k, r in enumerate(self.norms, start=1):
                w.writerow([k, f"{r:.17g}", f"{1.0 - r:.17g}"])


def _steps_per_segment(psi: ExponentialState, t: float, dt: float) -> list[int]:
    if abs(psi.horizon - t) > 1e-12 * max(1.0, t):
        raise ValueError(f"drive segments end at {psi.horizon}, not at t={t}")
    out = []
    for dur in psi.durations():
        m = dur / dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m) or round(m) < 1:
            raise ValueError(f"segment duration {dur} is not a multiple of dt={dt}")
        out.append(int(round(m)))
    return out


def cross_state(Ga: SLHModel, Gb: SLHModel, psi: ExponentialState, t: float, cfg: SliceConfig) -> SliceState:
    if (Ga.n, Ga.d) != (Gb.n, Gb.d):
        raise DimensionMismatch("models differ in (n, d)")
    d = Ga.d
    if psi.v.shape != (d,):
        raise DimensionMismatch(f"state vector has length {psi.v.shape[0]}, models have d={d}")
    steps = _steps_per_segment(psi, t, cfg.dt)
    Va = slice_propagator(Ga, cfg.dt, cfg.d_noise, cfg.scheme)
    Vb = Va if Gb is Ga else slice_propagator(Gb, cfg.dt, cfg.d_noise, cfg.scheme)
    M = np.outer(psi.v, np.conj(psi.v)).reshape(-1, order="F")
    ref = psi.norm_sq()
    norms = []
    for (_, alpha), m in zip(psi.segments, steps):
        c = slice_input(alpha, cfg.dt, cfg.d_noise)
        Phi = _cross_map(_kraus(Va, c, d), _kraus(Vb, c, d))
        for _ in range(m):
            M = Phi @ M
            norms.append(np.trace(M.reshape(d, d, order="F")).real)
    norms = np.asarray(norms)
    # untruncated squared norm of the input after each step
    rates = np.concatenate([np.full(m, np.vdot(a, a).real * cfg.dt) for (_, a), m in zip(psi.segments, steps)])
    expected = np.vdot(psi.v, psi.v).real * np.exp(np.cumsum(rates))
    rel = norms / expected if ref > 0 else norms
    return SliceState(M.reshape(d, d, order="F"), rel, sum(steps))


def _check_isometry(state: SliceState, cfg: SliceConfig) -> None:
    # only norm loss signals truncation trouble; the Euler map may also overshoot by O(dt)
    worst = float(np.max(1.0 - state.norms)) if state.norms.size else 0.0
    if worst > cfg.max_deficit:
        raise NumericalBreakdown(
            f"slice norm deficit {worst:.3e} exceeds {cfg.max_deficit:.1e}; raise d_noise or reduce dt"
        )


def simulate(G: SLHModel, psi: ExponentialState, t: float, cfg: SliceConfig) -> SliceState:
    """Collision-model evolution of ``psi`` under ``G`` up to time ``t``."""
    state = cross_state(G, G, psi, t, cfg)
    _check_isometry(state, cfg)
    return state


def raw_distance_sq(Ga: SLHModel, Gb: SLHModel, psi: ExponentialState, t: float, cfg: SliceConfig) -> float:
    """``||Phi_a - Phi_b||^2`` at a single slice step, without extrapolation."""
    aa = simulate(Ga, psi, t, cfg).value.real
    bb = simulate(Gb, psi, t, cfg).value.real
    ab = cross_state(Ga, Gb, psi, t, cfg).value
    return aa + bb - 2.0 * ab.real


def oracle_distance(Ga: SLHModel, Gb: SLHModel, psi: ExponentialState, t: float, cfg: SliceConfig, levels: int = 3):
    """Richardson-extrapolated ``||(U_a(t) - U_b(t)) psi||`` with an error bar.

    The squared distance is computed at ``dt, dt/2, ..., dt/2^(levels-1)``;
    first-order Richardson is applied to consecutive pairs, the finest
    extrapolant is the value and the spread of the last two extrapolants is
    the error bar (it over-estimates the residual error when the step error
    is a power series in ``dt``).
    """
    if levels < 3:
        raise ValueError("need at least three step levels for an error bar")
    p = SCHEME_ORDER[cfg.scheme]
    raw = []
    c = cfg
    for _ in range(levels):
        raw.append(raw_distance_sq(Ga, Gb, psi, t, c))
        c = c.refined()
    w = 2.0**p
    rich = [(w * raw[i + 1] - raw[i]) / (w - 1) for i in range(levels - 1)]
    value_sq = rich[-1]
    bar_sq = abs(rich[-1] - rich[-2]) + 1e-13 * max(1.0, psi.norm_sq())
    value = math.sqrt(max(value_sq, 0.0))
    hi = math.sqrt(max(value_sq + bar_sq, 0.0))
    lo = math.sqrt(max(value_sq - bar_sq, 0.0))
    return value, max(hi - value, value - lo)
