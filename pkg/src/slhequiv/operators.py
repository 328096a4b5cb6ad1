"""Dense operator kernel.

Operators are plain two-dimensional complex :class:`numpy.ndarray` objects.
Superoperators act on column-stacked operators, so that the map
``X -> A @ X @ B`` has matrix ``kron(B.T, A)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, ValidationError

DEFAULT_TOL = 1e-9


def as_operator(A) -> np.ndarray:
    """Return ``A`` as a square complex array, raising on bad shapes."""
    A = np.asarray(A, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DimensionMismatch(f"operator must be a non-empty square matrix, got shape {A.shape}")
    return A


def dag(A: np.ndarray) -> np.ndarray:
    return np.conj(A).T


def _check_same_dim(A, B):
    if A.shape != B.shape:
        raise DimensionMismatch(f"operator dimensions differ: {A.shape} vs {B.shape}")


def commutator(A, B) -> np.ndarray:
    A, B = as_operator(A), as_operator(B)
    _check_same_dim(A, B)
    return A @ B - B @ A


def op_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermiticity_residual(A) -> float:
    A = as_operator(A)
    return op_norm(A - dag(A))


def unitarity_residual(U) -> float:
    U = as_operator(U)
    eye = np.eye(U.shape[0])
    return max(op_norm(U @ dag(U) - eye), op_norm(dag(U) @ U - eye))


def is_hermitian(A, tol: float = DEFAULT_TOL) -> bool:
    return hermiticity_residual(A) <= tol


def is_unitary(U, tol: float = DEFAULT_TOL) -> bool:
    return unitarity_residual(U) <= tol


def is_skew_adjoint(A, tol: float = DEFAULT_TOL) -> bool:
    A = as_operator(A)
    return op_norm(A + dag(A)) <= tol


def func_of_hermitian(A, f: Callable[[np.ndarray], np.ndarray], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Apply a scalar function to a Hermitian operator through its eigendecomposition.

    ``f`` is called once on the real eigenvalue array and must be vectorised.
    """
    A = as_operator(A)
    res = hermiticity_residual(A)
    if res > tol:
        raise ValidationError(f"func_of_hermitian needs a Hermitian argument (residual {res:.3e})")
    w, U = np.linalg.eigh(0.5 * (A + dag(A)))
    return (U * np.asarray(f(w), dtype=complex)) @ dag(U)


def func_of_normal(A, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to a normal matrix (unitary, anti-Hermitian, ...) via the complex Schur form."""
    A = as_operator(A)
    T, Z = scipy.linalg.schur(A, output="complex")
    w = np.diag(T)
    return (Z * np.asarray(f(w), dtype=complex)) @ dag(Z)


def kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on ``dim x dim`` operators stored as a ``dim**2 x dim**2`` matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        dim = int(round(np.sqrt(M.shape[0])))
        if M.ndim != 2 or M.shape[0] != M.shape[1] or dim * dim != M.shape[0]:
            raise DimensionMismatch(f"superoperator matrix must be d^2 x d^2, got {M.shape}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, X) -> np.ndarray:
        X = as_operator(X)
        if X.shape[0] != self.dim:
            raise DimensionMismatch(f"operator of dim {X.shape[0]} fed to superoperator of dim {self.dim}")
        return unvec(self.matrix @ vec(X), self.dim)

    __call__ = apply

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise DimensionMismatch("superoperator dimensions differ")
        return Superoperator(self.matrix @ other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise DimensionMismatch("superoperator dimensions differ")
        return Superoperator(self.matrix + other.matrix)

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim))

    @classmethod
    def sandwich(cls, A, B) -> "Superoperator":
        """The map ``X -> A X B``."""
        A, B = as_operator(A), as_operator(B)
        _check_same_dim(A, B)
        return cls(np.kron(B.T, A))


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(x).reshape((dim, dim), order="F")


def superop_exp(G: Superoperator, s: float) -> Superoperator:
    """Matrix exponential ``exp(s G)`` (Pade scaling and squaring)."""
    if s < 0:
        raise ValueError("superop_exp needs s >= 0")
    if s == 0:
        return Superoperator.identity(G.dim)
    return Superoperator(scipy.linalg.expm(s * G.matrix))


# -- JSON ---------------------------------------------------------------------

def operator_to_json(A) -> list:
    A = as_operator(A)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def operator_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("operator JSON must be a nested array of [re, im] pairs")
    return as_operator(arr[..., 0] + 1j * arr[..., 1])


def vector_to_json(v) -> list:
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    return [[float(z.real), float(z.imag)] for z in v]


def vector_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        # bare real entries are accepted for convenience
        return arr.astype(complex)
    if arr.ndim != 2 or arr.shape[-1] != 2:
        raise ValueError("vector JSON must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


# -- standard operators ---------------------------------------------------------

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# basis ordering (|e>, |g>): sigma_minus lowers |e> to |g>
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = dag(SIGMA_MINUS)


def spin_z(j: float) -> np.ndarray:
    """``F_z = diag(j, j-1, ..., -j)`` for spin quantum number ``j``."""
    twoj = 2 * j
    if twoj < 0 or abs(twoj - round(twoj)) > 1e-12:
        raise ValueError(f"spin quantum number must be a non-negative half-integer, got {j}")
    return np.diag(j - np.arange(int(round(twoj)) + 1)).astype(complex)


def annihilation(levels: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on ``levels`` Fock states."""
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)
