"""Vacuum transfer semigroups and exact overlaps for exponential states.

For two models ``Ga`` and ``Gb`` the map

    X  ->  <vacuum| U_a(t)* (X (x) I) U_b(t) |vacuum>

is a norm-continuous contraction semigroup on system operators whose generator
is ``X -> Ka* X + X Kb + sum_i La_i* X Lb_i``. Displacing both models by a
constant drive ``alpha`` turns exponential-vector matrix elements into vacuum
ones, and a piecewise-constant drive is handled by nesting one semigroup per
segment. Each segment costs a single ``d^2 x d^2`` matrix exponential.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NumericalBreakdown
from .operators import Superoperator, as_operator, dag, superop_exp, vector_from_json, vector_to_json
from .slh import (
    DampingForm,
    SLHModel,
    block_adjoint,
    block_apply,
    damping,
    displace,
    identity_blocks,
    inner,
    scalar_column,
)

RADICAND_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ExponentialState:
    """``v (x) exp(f)`` with ``f`` piecewise constant.

    ``segments`` is a sequence of ``(t_end, alpha)`` pairs; segment ``j`` covers
    ``[t_{j-1}, t_j)`` with ``t_0 = 0``.
    """

    v: np.ndarray
    segments: tuple = field(default=())

    def __post_init__(self):
        v = np.array(self.v, dtype=complex).reshape(-1)
        v.setflags(write=False)
        segs = []
        prev = 0.0
        for t_end, alpha in self.segments:
            t_end = float(t_end)
            if not t_end > prev:
                raise ValueError("segment end times must be strictly increasing and positive")
            a = np.array(np.atleast_1d(alpha), dtype=complex).reshape(-1)
            a.setflags(write=False)
            segs.append((t_end, a))
            prev = t_end
        if len({a.shape for _, a in segs}) > 1:
            raise DimensionMismatch("all segment amplitudes must live in the same C^n")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def constant(cls, v, alpha, t: float) -> "ExponentialState":
        return cls(v, ((t, alpha),))

    @property
    def horizon(self) -> float:
        return self.segments[-1][0] if self.segments else 0.0

    def durations(self) -> list[float]:
        out, prev = [], 0.0
        for t_end, _ in self.segments:
            out.append(t_end - prev)
            prev = t_end
        return out

    def drive_norm_sq(self) -> float:
        """``||f||^2 = sum_j |alpha_j|^2 (t_j - t_{j-1})``."""
        return float(sum(np.vdot(a, a).real * dt for (_, a), dt in zip(self.segments, self.durations())))

    def norm_sq(self) -> float:
        return float(np.vdot(self.v, self.v).real * np.exp(self.drive_norm_sq()))

    def to_json(self) -> dict:
        return {
            "v": vector_to_json(self.v),
            "segments": [{"t_end": t, "alpha": vector_to_json(a)} for t, a in self.segments],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExponentialState":
        return cls(
            vector_from_json(data["v"]),
            tuple((s["t_end"], vector_from_json(s["alpha"])) for s in data["segments"]),
        )


@dataclass(frozen=True, eq=False)
class TransferGenerator:
    """Generator of ``X -> E_vac[U_left* X U_right]``."""

    superop: Superoperator
    left: DampingForm
    right: DampingForm

    def apply(self, X) -> np.ndarray:
        return self.superop.apply(X)

    __call__ = apply


def _as_damping(G) -> DampingForm:
    return damping(G) if isinstance(G, SLHModel) else G


def transfer_generator(Ga, Gb) -> TransferGenerator:
    """``X -> Ka* X + X Kb + sum_i La_i* X Lb_i`` (``Ga`` is the adjoined model)."""
    A, B = _as_damping(Ga), _as_damping(Gb)
    if (A.n, A.d) != (B.n, B.d):
        raise DimensionMismatch(f"models differ in (n, d): {(A.n, A.d)} vs {(B.n, B.d)}")
    eye = np.eye(A.d)
    M = np.kron(eye, dag(A.K)) + np.kron(B.K.T, eye)
    for La, Lb in zip(A.L, B.L):
        M = M + np.kron(Lb.T, dag(La))
    return TransferGenerator(Superoperator(M), A, B)


def delta_generator_on_identity(G: SLHModel, dG: SLHModel, alpha) -> np.ndarray:
    """Closed form of the displaced transfer generator applied to ``I``.

    For ``G~ = G <| dG`` this is
    ``dK* - alpha* dS* dL + dL* alpha + alpha* (dS* - 1) alpha`` with
    ``dK = -i dH - dL* dL / 2``. No unperturbed-model quantity appears.
    """
    if (G.n, G.d) != (dG.n, dG.d):
        raise DimensionMismatch("model and perturbation differ in (n, d)")
    n, d = dG.n, dG.d
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alpha.shape != (n,):
        raise DimensionMismatch(f"alpha must lie in C^{n}")
    a = scalar_column(alpha, d)
    dSd = block_adjoint(dG.S)
    dK = -1j * dG.H - 0.5 * inner(dG.L, dG.L)
    return (
        dag(dK)
        - inner(a, block_apply(dSd, dG.L))
        + inner(dG.L, a)
        + inner(a, block_apply(dSd - identity_blocks(n, d), a))
    )


def evolve(T: TransferGenerator, X, s: float) -> np.ndarray:
    return superop_exp(T.superop, s).apply(as_operator(X))


def _check_horizon(psi: ExponentialState, t: float):
    if not psi.segments:
        raise ValueError("exponential state has no drive segments")
    if abs(psi.horizon - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"drive segments end at {psi.horizon}, not at the horizon t={t}")


def overlap(Ga, Gb, psi: ExponentialState, t: float) -> complex:
    """``<psi, U_a(t)* U_b(t) psi>`` for an exponential state with piecewise-constant drive.

    The earliest segment acts outermost; each segment semigroup runs for its
    duration.
    """
    _check_horizon(psi, t)
    A, B = _as_damping(Ga), _as_damping(Gb)
    if psi.v.shape != (A.d,):
        raise DimensionMismatch(f"state vector has length {psi.v.shape[0]}, models have d={A.d}")
    X = np.eye(A.d, dtype=complex)
    for (_, alpha), dt in reversed(list(zip(psi.segments, psi.durations()))):
        T = transfer_generator(displace(A, alpha), displace(B, alpha))
        X = evolve(T, X, dt)
    return complex(np.vdot(psi.v, X @ psi.v) * np.exp(psi.drive_norm_sq()))


def _defect(A: DampingForm, B: DampingForm) -> np.ndarray:
    """``T_ab(I) - T_bb(I) = (Ka - Kb)* + sum_i (La_i - Lb_i)* Lb_i``.

    ``T_bb(I)`` vanishes for a valid model, so this is ``T_ab(I)`` written in
    differences: exactly zero for identical models and free of cancellation
    when they are close.
    """
    return dag(A.K - B.K) + inner(A.L - B.L, B.L)


def deficit(Ga, Gb, psi: ExponentialState, t: float) -> np.ndarray:
    """``I - T_1 o ... o T_m (I)`` propagated directly rather than by subtraction.

    Per segment ``D -> e^{sT}(D) - int_0^s e^{uT}(R) du`` with ``R`` the
    generator defect on ``I``; both terms come from one augmented matrix
    exponential.
    """
    _check_horizon(psi, t)
    A, B = _as_damping(Ga), _as_damping(Gb)
    d = A.d
    if psi.v.shape != (d,):
        raise DimensionMismatch(f"state vector has length {psi.v.shape[0]}, models have d={d}")
    D = np.zeros(d * d, dtype=complex)
    for (_, alpha), dt in reversed(list(zip(psi.segments, psi.durations()))):
        Aa, Ba = displace(A, alpha), displace(B, alpha)
        T = transfer_generator(Aa, Ba).superop.matrix
        aug = np.zeros((d * d + 1, d * d + 1), dtype=complex)
        aug[:-1, :-1] = T
        aug[:-1, -1] = -_defect(Aa, Ba).reshape(-1, order="F")
        E = scipy.linalg.expm(dt * aug)
        D = E[:-1, :-1] @ D + E[:-1, -1]
    return D.reshape(d, d, order="F")


def distance(Ga, Gb, psi: ExponentialState, t: float) -> float:
    """``||(U_a(t) - U_b(t)) psi||``.

    The radicand ``2||psi||^2 - 2 Re <psi, U_a* U_b psi>`` is evaluated as
    ``2 e^{||f||^2} Re <v, D v>`` with ``D`` from :func:`deficit`, which keeps
    full relative precision when the two models nearly agree.
    """
    D = deficit(Ga, Gb, psi, t)
    radicand = 2.0 * np.exp(psi.drive_norm_sq()) * np.vdot(psi.v, D @ psi.v).real
    return _sqrt_radicand(radicand, psi.norm_sq())


def distance_via_overlap(Ga, Gb, psi: ExponentialState, t: float) -> float:
    """Same quantity from ``2||psi||^2 - 2 Re overlap``; loses precision near zero."""
    norm_sq = psi.norm_sq()
    return _sqrt_radicand(2.0 * norm_sq - 2.0 * overlap(Ga, Gb, psi, t).real, norm_sq)


def _sqrt_radicand(radicand: float, norm_sq: float) -> float:
    if radicand < 0:
        if radicand < -RADICAND_TOL * max(1.0, norm_sq):
            raise NumericalBreakdown(f"negative squared distance {radicand:.3e}: transfer generator is broken")
        radicand = 0.0
    return float(np.sqrt(radicand))
