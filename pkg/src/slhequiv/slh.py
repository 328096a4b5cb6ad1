"""SLH models, the series product and its derived constructions.

A model ``G ~ (S, L, H)`` with ``n`` field channels on a ``d``-dimensional
system is stored blockwise:

* ``S`` has shape ``(n, n, d, d)``; block ``S[i, j]`` is the operator entry S_ij,
* ``L`` has shape ``(n, d, d)``,
* ``H`` has shape ``(d, d)``.

Scalar entries (the usual case) are just multiples of the identity block, so
operator-valued scattering such as ``cos(kappa F_z)`` needs no special casing.
All arrays are made read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .operators import (
    DEFAULT_TOL,
    Superoperator,
    as_operator,
    dag,
    hermiticity_residual,
    op_norm,
    operator_from_json,
    operator_to_json,
)

# -- block helpers ---------------------------------------------------------------


def assemble(S: np.ndarray) -> np.ndarray:
    """Block array ``(n, n, d, d)`` -> full ``(n d, n d)`` matrix (channel index outermost)."""
    n, _, d, _ = S.shape
    return S.transpose(0, 2, 1, 3).reshape(n * d, n * d)


def split_blocks(M: np.ndarray, n: int, d: int) -> np.ndarray:
    """Inverse of :func:`assemble`."""
    return np.asarray(M, dtype=complex).reshape(n, d, n, d).transpose(0, 2, 1, 3)


def stack(L: np.ndarray) -> np.ndarray:
    """Operator column ``(n, d, d)`` -> ``(n d, d)`` matrix."""
    n, d, _ = L.shape
    return L.reshape(n * d, d)


def block_adjoint(S: np.ndarray) -> np.ndarray:
    return np.conj(S).transpose(1, 0, 3, 2)


def block_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("ikab,kjbc->ijac", A, B)


def block_apply(S: np.ndarray, L: np.ndarray) -> np.ndarray:
    """``(S L)_i = sum_j S_ij L_j``."""
    return np.einsum("ijab,jbc->iac", S, L)


def inner(L: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``L* M = sum_i L_i^* M_i`` for operator columns."""
    return np.einsum("iba,ibc->ac", np.conj(L), M)


def im(A: np.ndarray) -> np.ndarray:
    """``Im{A} = (A - A^*) / 2i`` (exactly Hermitian in floating point)."""
    return (A - dag(A)) / 2j


def scalar_column(alpha, d: int) -> np.ndarray:
    """Lift ``alpha in C^n`` to the operator column ``alpha_i I_d``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    return np.einsum("i,ab->iab", alpha, np.eye(d))


def scalar_blocks(R, d: int) -> np.ndarray:
    """Lift an ``n x n`` scalar matrix to blocks ``R_ij I_d``."""
    R = np.asarray(R, dtype=complex)
    return np.einsum("ij,ab->ijab", R, np.eye(d))


def identity_blocks(n: int, d: int) -> np.ndarray:
    return scalar_blocks(np.eye(n), d)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _coerce_S(S, n: int, d: int) -> np.ndarray:
    if S is None:
        return identity_blocks(n, d)
    S = np.asarray(S, dtype=complex)
    if S.ndim == 0:
        S = S.reshape(1, 1)
    if S.ndim == 4:
        return S
    if S.ndim == 2 and S.shape == (n, n):
        return scalar_blocks(S, d)
    if S.ndim == 2 and S.shape == (n * d, n * d):
        return split_blocks(S, n, d)
    raise DimensionMismatch(f"cannot interpret scattering matrix of shape {S.shape} for n={n}, d={d}")


def _coerce_L(L) -> np.ndarray:
    if isinstance(L, np.ndarray) and L.ndim == 3:
        return np.asarray(L, dtype=complex)
    ops = [as_operator(x) for x in (L if isinstance(L, (list, tuple)) else [L])]
    return np.stack(ops)


def _check_shapes(S, L, X, name):
    n, d = L.shape[0], L.shape[1]
    if L.shape != (n, d, d):
        raise DimensionMismatch(f"L must have shape (n, d, d), got {L.shape}")
    if S.shape != (n, n, d, d):
        raise DimensionMismatch(f"S must have shape {(n, n, d, d)}, got {S.shape}")
    if X.shape != (d, d):
        raise DimensionMismatch(f"{name} must have shape {(d, d)}, got {X.shape}")


# -- model types -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SLHModel:
    """Quantum Markov component ``(S, L, H)``; see the module docstring for shapes."""

    S: np.ndarray
    L: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        S, L, H = _frozen(self.S), _frozen(self.L), _frozen(self.H)
        _check_shapes(S, L, H, "H")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "H", H)

    @classmethod
    def build(cls, S=None, L=None, H=None, *, n: int | None = None, d: int | None = None) -> "SLHModel":
        """Flexible constructor.

        ``L`` may be one operator or a list of them; ``S`` may be ``None``
        (identity), an ``n x n`` scalar matrix, an ``nd x nd`` matrix or a block
        array. ``H`` defaults to zero.
        """
        if L is None:
            if n is None or d is None:
                raise ValueError("need L or both n and d")
            L = np.zeros((n, d, d), dtype=complex)
        L = _coerce_L(L)
        n_, d_ = L.shape[0], L.shape[1]
        H = np.zeros((d_, d_), dtype=complex) if H is None else as_operator(H)
        return cls(_coerce_S(S, n_, d_), L, H)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def d(self) -> int:
        return self.L.shape[1]

    @property
    def S_full(self) -> np.ndarray:
        return assemble(self.S)

    def __repr__(self):
        return f"SLHModel(n={self.n}, d={self.d})"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "S": [[operator_to_json(self.S[i, j]) for j in range(self.n)] for i in range(self.n)],
            "L": [operator_to_json(Li) for Li in self.L],
            "H": operator_to_json(self.H),
        }

    @classmethod
    def from_json(cls, data: dict, tol: float = DEFAULT_TOL, check: bool = True) -> "SLHModel":
        n, d = int(data["n"]), int(data["d"])
        S = np.array([[operator_from_json(b) for b in row] for row in data["S"]])
        L = np.array([operator_from_json(x) for x in data["L"]])
        H = operator_from_json(data["H"])
        if S.shape != (n, n, d, d) or L.shape != (n, d, d) or H.shape != (d, d):
            raise DimensionMismatch(f"model JSON blocks do not match declared n={n}, d={d}")
        G = cls(S, L, H)
        if check:
            require_valid(G, tol)
        return G


@dataclass(frozen=True, eq=False)
class DampingForm:
    """Model in the ``[S, L, K]`` convention with ``K = -1/2 L*L - iH``."""

    S: np.ndarray
    L: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        S, L, K = _frozen(self.S), _frozen(self.L), _frozen(self.K)
        _check_shapes(S, L, K, "K")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def d(self) -> int:
        return self.L.shape[1]

    def unitarity_budget(self) -> float:
        """``||K + K* + L*L||``, zero for the damping form of a valid model."""
        return op_norm(self.K + dag(self.K) + inner(self.L, self.L))

    def hamiltonian(self) -> np.ndarray:
        """Recover ``H = i (K - K*) / 2`` (the anti-Hermitian part of K is ``-iH``)."""
        return 0.5j * (self.K - dag(self.K))

    def to_model(self) -> SLHModel:
        return SLHModel(self.S, self.L, self.hamiltonian())


@dataclass(frozen=True)
class GaugeElement:
    """Element ``(R, beta, e)`` of the Euclidean group over ``C^n``."""

    R: np.ndarray
    beta: np.ndarray
    e: float

    def as_model(self, d: int) -> SLHModel:
        return SLHModel(
            scalar_blocks(self.R, d),
            scalar_column(self.beta, d),
            float(self.e) * np.eye(d),
        )


class Violation(NamedTuple):
    kind: str
    block: str
    residual: float

    def __str__(self):
        return f"{self.kind} violation in {self.block}: residual {self.residual:.3e}"


# -- validation --------------------------------------------------------------------


def validate(G: SLHModel, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Structural diagnostics: empty iff S is unitary and H Hermitian within ``tol``."""
    out = []
    S = G.S_full
    eye = np.eye(S.shape[0])
    res = max(op_norm(S @ dag(S) - eye), op_norm(dag(S) @ S - eye))
    if res > tol:
        out.append(Violation("unitarity", "S", res))
    res = hermiticity_residual(G.H)
    if res > tol:
        out.append(Violation("hermiticity", "H", res))
    return out


def require_valid(G: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    violations = validate(G, tol)
    if violations:
        raise ValidationError("invalid SLH model: " + "; ".join(map(str, violations)), violations)
    return G


def _check_compatible(G1, G2):
    if (G1.n, G1.d) != (G2.n, G2.d):
        raise DimensionMismatch(f"models differ in (n, d): {(G1.n, G1.d)} vs {(G2.n, G2.d)}")


# -- the algebra ---------------------------------------------------------------------


def identity_model(n: int, d: int) -> SLHModel:
    return SLHModel(identity_blocks(n, d), np.zeros((n, d, d)), np.zeros((d, d)))


def damping(G: SLHModel, tol: float = DEFAULT_TOL) -> DampingForm:
    require_valid(G, tol)
    K = -0.5 * inner(G.L, G.L) - 1j * G.H
    return DampingForm(G.S, G.L, K)


def series(G2: SLHModel, G1: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    """Series product ``G2 <| G1``: the output of ``G1`` feeds ``G2``."""
    _check_compatible(G1, G2)
    S2L1 = block_apply(G2.S, G1.L)
    G = SLHModel(
        block_matmul(G2.S, G1.S),
        G2.L + S2L1,
        G1.H + G2.H + im(inner(G2.L, S2L1)),
    )
    return require_valid(G, tol)


def series_damping(G2: DampingForm, G1: DampingForm) -> DampingForm:
    _check_compatible(G1, G2)
    S2L1 = block_apply(G2.S, G1.L)
    return DampingForm(
        block_matmul(G2.S, G1.S),
        G2.L + S2L1,
        G1.K + G2.K - inner(G2.L, S2L1),
    )


def identity_damping(n: int, d: int) -> DampingForm:
    return DampingForm(identity_blocks(n, d), np.zeros((n, d, d)), np.zeros((d, d)))


def inverse(G: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    require_valid(G, tol)
    Sd = block_adjoint(G.S)
    return SLHModel(Sd, -block_apply(Sd, G.L), -G.H)


def right_perturb(G: SLHModel, dG: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    """``G <| dG``."""
    return series(G, dG, tol)


def left_perturb(G: SLHModel, dG: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    """``dG <| G``."""
    return series(dG, G, tol)


def perturbation_between(G: SLHModel, G_tilde: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    """The right perturbation ``dG = G^{-1} <| G_tilde``, so ``G <| dG = G_tilde``."""
    _check_compatible(G, G_tilde)
    return series(inverse(G, tol), G_tilde, tol)


def delta_residual(dG: SLHModel) -> float:
    """Distance of a perturbation from the identity: ``||dS - I|| + ||dL|| + ||dH||``."""
    dS = dG.S_full - np.eye(dG.n * dG.d)
    return op_norm(dS) + op_norm(stack(dG.L)) + op_norm(dG.H)


def displacement(alpha, d: int) -> DampingForm:
    """The Weyl displacement generator ``[I, alpha, -|alpha|^2 / 2]``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    n = alpha.shape[0]
    return DampingForm(identity_blocks(n, d), scalar_column(alpha, d), -0.5 * np.vdot(alpha, alpha).real * np.eye(d))


def displace(G, alpha, tol: float = DEFAULT_TOL) -> DampingForm:
    """``G(alpha) = G <| [I, alpha, -|alpha|^2/2] = [S, L + S alpha, K - |alpha|^2/2 - L* S alpha]``."""
    D = damping(G, tol) if isinstance(G, SLHModel) else G
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alpha.shape != (D.n,):
        raise DimensionMismatch(f"displacement needs alpha in C^{D.n}, got shape {alpha.shape}")
    Salpha = block_apply(D.S, scalar_column(alpha, D.d))
    return DampingForm(
        D.S,
        D.L + Salpha,
        D.K - 0.5 * np.vdot(alpha, alpha).real * np.eye(D.d) - inner(D.L, Salpha),
    )


def lindblad(G: SLHModel, X) -> np.ndarray:
    """Heisenberg-picture Lindblad generator ``sum_i L_i* X L_i + K* X + X K``."""
    X = as_operator(X)
    if X.shape != G.H.shape:
        raise DimensionMismatch(f"operator of dim {X.shape[0]} for a model with d={G.d}")
    K = -0.5 * inner(G.L, G.L) - 1j * G.H
    return inner(G.L, np.einsum("ab,ibc->iac", X, G.L)) + dag(K) @ X + X @ K


def lindblad_superop(G: SLHModel) -> Superoperator:
    d = G.d
    K = -0.5 * inner(G.L, G.L) - 1j * G.H
    eye = np.eye(d)
    M = np.kron(eye, dag(K)) + np.kron(K.T, eye)
    for Li in G.L:
        M = M + np.kron(Li.T, dag(Li))
    return Superoperator(M)


def gauge_transform(g: GaugeElement, G: SLHModel, tol: float = DEFAULT_TOL) -> SLHModel:
    R = np.asarray(g.R, dtype=complex)
    if R.shape != (G.n, G.n):
        raise DimensionMismatch(f"gauge rotation must be {G.n}x{G.n}, got {R.shape}")
    if np.atleast_1d(g.beta).shape != (G.n,):
        raise DimensionMismatch(f"gauge shift must lie in C^{G.n}")
    return series(g.as_model(G.d), G, tol)


def virtual_work(G: SLHModel, dG: SLHModel, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Energy change ``H' - H`` of the left perturbation ``G' = dG <| G``."""
    if delta_scattering(dG) > tol:
        raise ValidationError("virtual work is defined only for perturbations with trivial scattering")
    return left_perturb(G, dG, tol).H - G.H


def delta_scattering(G: SLHModel) -> float:
    return op_norm(G.S_full - np.eye(G.n * G.d))


def left_residual(G: SLHModel, dG: SLHModel, alpha) -> np.ndarray:
    """Operator that must vanish for a left perturbation ``dG <| G`` to be harmless.

    The phase factor of the perturbation is ``dG.S`` itself. The adjoint on the
    final ``dL`` (row position) is implied by the block shapes.
    """
    _check_compatible(G, dG)
    n, d = G.n, G.d
    a = scalar_column(np.atleast_1d(np.asarray(alpha, dtype=complex)).reshape(n), d)
    S, L = G.S, G.L
    P, dL = dG.S, dG.L
    PmI = P - identity_blocks(n, d)
    dK = -0.5 * inner(dL, dL) - 1j * dG.H
    Sa = block_apply(S, a)
    # row vector r_j = sum_i A_i^* B_ij, written as inner(A, B-column) after applying B to Sa
    term_row = inner(L, block_apply(PmI, Sa)) + inner(dL, block_apply(P, Sa))
    return (
        dK
        + inner(L, block_apply(PmI, L))
        + inner(dL, block_apply(P, L))
        - inner(L, dL)
        + inner(Sa, block_apply(PmI, L) + dL)
        - term_row
        + inner(Sa, block_apply(PmI, Sa))
    )
