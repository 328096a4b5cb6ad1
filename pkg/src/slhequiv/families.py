"""Model sequences that are asymptotically equivalent by construction.

Each builder returns the unperturbed model ``G``, the perturbation ``delta``
and the equivalent model ``G_tilde = G <| delta``, plus whatever closed-form
quantities the construction exposes for cross-checking.

* :func:`squeezing_family`  strong squeezing limit written through a Bogoliubov
  transformation of vacuum noise; ``G`` diverges like ``sqrt(n)``.
* :func:`faraday_family`  two polarisation channels, weak Faraday rotation and
  strong drive; the equivalent sequence has decoupled channels.
* :func:`lan_family`  local asymptotic normality scaling of a parametric family.
* :func:`virtual_rotation`  the left-perturbation picture of virtual work.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .operators import DEFAULT_TOL, as_operator, dag, func_of_hermitian, hermiticity_residual, spin_z
from .slh import (
    SLHModel,
    identity_blocks,
    im,
    lindblad,
    perturbation_between,
    right_perturb,
    series,
    virtual_work,
)


@dataclass(frozen=True, eq=False)
class Equivalence:
    """``G_tilde = G <| delta`` at one index of a sequence."""

    index: float
    G: SLHModel
    delta: SLHModel
    G_tilde: SLHModel


# -- strong squeezing ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SqueezingSpec:
    """Single-channel model ``(I, L, H)`` driven by maximally squeezed noise.

    ``n`` is the thermal-like bath parameter (not the channel count) and
    ``theta`` the squeezing phase, ``m = sqrt(n(n+1)) e^{i theta}``.
    """

    L: np.ndarray
    H: np.ndarray
    theta: float
    n: float = 0.0
    theta_margin: float = 1e-3

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("squeezing parameter n must be non-negative")
        if not abs(self.theta) < np.pi - self.theta_margin:
            raise ValueError(f"theta must lie in (-pi + {self.theta_margin}, pi - {self.theta_margin})")
        if hermiticity_residual(self.H) > DEFAULT_TOL:
            raise ValidationError("squeezing Hamiltonian is not Hermitian")

    def at(self, n: float) -> "SqueezingSpec":
        return replace(self, n=float(n))


@dataclass(frozen=True, eq=False)
class SqueezingModels(Equivalence):
    L_bare: Optional[np.ndarray] = None
    u: complex = 0.0
    v: complex = 0.0
    m: complex = 0.0
    nu: float = 1.0
    F: Optional[np.ndarray] = None
    H_n: Optional[np.ndarray] = None
    H_limit: Optional[np.ndarray] = None

    def damping_K(self) -> np.ndarray:
        """The squeezed-bath damping operator written directly in ``n`` and ``m``."""
        L, m = self.L_bare, self.m
        n = abs(self.v) ** 2
        return (
            -0.5 * (n + 1) * dag(L) @ L
            - 0.5 * n * L @ dag(L)
            + 0.5 * m * dag(L) @ dag(L)
            + 0.5 * np.conj(m) * L @ L
            - 1j * self.G.H
        )


def bogoliubov(n: float, theta: float) -> tuple[complex, complex, complex, float]:
    """``(u, v, m, nu)`` for maximal squeezing; ``|u|^2 - |v|^2 = 1`` and ``u v = m``."""
    s = np.sqrt(n * (n + 1.0))
    nu = 2.0 * n + 1.0 + 2.0 * s * np.cos(theta)
    if not nu > 0:
        raise ValidationError(f"nu(n) = {nu:.3e} is not positive; theta too close to pi")
    phase = np.exp(1j * theta)
    u = (n + 1.0 + s * phase) / np.sqrt(nu)
    v = (n + s * phase) / np.sqrt(nu)
    return u, v, s * phase, nu


def squeezing_limit_hamiltonian(L, theta: float) -> np.ndarray:
    """``n -> infinity`` limit of the Hamiltonian shift produced by the perturbation."""
    L = as_operator(L)
    c = (1.0 + np.exp(-1j * theta)) / (2.0 * (1.0 + np.cos(theta)))
    return im(c * L @ L) - np.sin(theta) / (2.0 * (1.0 + np.cos(theta))) * dag(L) @ L


def squeezing_family(spec: SqueezingSpec, tol: float = DEFAULT_TOL) -> SqueezingModels:
    n, theta = spec.n, spec.theta
    L, H = as_operator(spec.L), as_operator(spec.H)
    u, v, m, nu = bogoliubov(n, theta)
    if nu <= tol:
        raise ValidationError(f"nu(n) = {nu:.3e} is not positive; theta too close to pi")
    s = np.sqrt(n * (n + 1.0))
    Ln = L * np.conj(u) - dag(L) * v
    c = n + s * np.exp(-1j * theta)
    F = (c * L - np.conj(c) * dag(L)) / np.sqrt(nu)
    G = SLHModel.build(None, [Ln], H)
    delta = SLHModel.build(None, [-L / np.sqrt(nu)])
    G_tilde = right_perturb(G, delta, tol)
    H_n = im(c / nu * L @ L) - s / nu * np.sin(theta) * dag(L) @ L
    return SqueezingModels(
        n, G, delta, G_tilde,
        L_bare=L, u=u, v=v, m=m, nu=nu, F=F, H_n=H_n,
        H_limit=squeezing_limit_hamiltonian(L, theta),
    )


# -- Faraday rotation -------------------------------------------------------------------


@dataclass(frozen=True)
class FaradaySpec:
    j: float = 0.5
    kappa: float = 1.0
    alpha: complex = 1.0
    k: float = 1.0

    def at(self, k: float) -> "FaradaySpec":
        return replace(self, k=float(k))


@dataclass(frozen=True, eq=False)
class FaradayModels(Equivalence):
    decoupled: Optional[SLHModel] = None


def faraday_family(spec: FaradaySpec, tol: float = DEFAULT_TOL) -> FaradayModels:
    """Scaled Faraday model with ``kappa -> kappa/k`` and ``alpha -> k alpha``."""
    Fz = spin_z(spec.j)
    d = Fz.shape[0]
    k, kappa, alpha = float(spec.k), spec.kappa, complex(spec.alpha)
    C = func_of_hermitian(Fz, lambda w: np.cos(kappa * w / k))
    Sn = func_of_hermitian(Fz, lambda w: np.sin(kappa * w / k))
    S = np.array([[C, -Sn], [Sn, C]])
    G = SLHModel(S, np.array([-k * Sn * alpha, k * C * alpha]), np.zeros((d, d)))
    S_adj = np.conj(S).transpose(1, 0, 3, 2)
    shift = np.array([k * Sn * alpha - kappa * Fz * alpha, k * (np.eye(d) - C) * alpha])
    delta = SLHModel(S_adj, np.einsum("ijab,jbc->iac", S_adj, shift), np.zeros((d, d)))
    decoupled = SLHModel(identity_blocks(2, d), np.array([-kappa * Fz * alpha, k * alpha * np.eye(d)]), np.zeros((d, d)))
    return FaradayModels(k, G, delta, right_perturb(G, delta, tol), decoupled=decoupled)


# -- local asymptotic normality ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LANSpec:
    """Parametric family ``theta -> (L(theta), H(theta))`` on a single channel.

    ``derivatives``, if given, maps ``theta`` to ``(L', L'', H', H'')``;
    otherwise Richardson-refined central differences are used.
    """

    family: Callable[[float], tuple]
    theta0: float
    v: float
    k: float = 1.0
    derivatives: Optional[Callable[[float], tuple]] = None

    def at(self, k: float) -> "LANSpec":
        return replace(self, k=float(k))

    def evaluate(self, theta: float):
        L, H = self.family(theta)
        L, H = as_operator(L), as_operator(H)
        res = hermiticity_residual(H)
        if res > DEFAULT_TOL:
            raise ValidationError(f"H({theta}) is not Hermitian (residual {res:.3e})")
        return L, H

    def taylor(self):
        """``(L, L', L'', H, H', H'')`` at ``theta0``."""
        L0, H0 = self.evaluate(self.theta0)
        if self.derivatives is not None:
            dL, ddL, dH, ddH = (as_operator(x) for x in self.derivatives(self.theta0))
            return L0, dL, ddL, H0, dH, ddH
        scale = max(1.0, abs(self.theta0))
        dL, dH = _richardson_first(self.evaluate, self.theta0, 1e-4 * scale)
        ddL, ddH = _richardson_second(self.evaluate, self.theta0, 1e-3 * scale)
        return L0, dL, ddL, H0, dH, ddH

    def remainders(self, k: Optional[float] = None):
        """``k^2 R_L(v/k)`` and ``k^2 R_H(v/k)``, the second-order Taylor remainders scaled by ``k^2``."""
        k = self.k if k is None else float(k)
        L0, dL, ddL, H0, dH, ddH = self.taylor()
        x = self.v / k
        L, H = self.evaluate(self.theta0 + x)
        RL = L - L0 - dL * x - 0.5 * ddL * x**2
        RH = H - H0 - dH * x - 0.5 * ddH * x**2
        return k**2 * RL, k**2 * RH


def _central(f, x, h):
    (Lp, Hp), (Lm, Hm) = f(x + h), f(x - h)
    return (Lp - Lm) / (2 * h), (Hp - Hm) / (2 * h)


def _richardson_first(f, x, h):
    a, b = _central(f, x, h), _central(f, x, h / 2)
    return tuple((4 * q - p) / 3 for p, q in zip(a, b))


def _second(f, x, h):
    (Lp, Hp), (L0, H0), (Lm, Hm) = f(x + h), f(x), f(x - h)
    return (Lp - 2 * L0 + Lm) / h**2, (Hp - 2 * H0 + Hm) / h**2


def _richardson_second(f, x, h):
    a, b = _second(f, x, h), _second(f, x, h / 2)
    return tuple((4 * q - p) / 3 for p, q in zip(a, b))


@dataclass(frozen=True, eq=False)
class LANModels(Equivalence):
    phase: Optional[np.ndarray] = None


def lan_phase(spec: LANSpec) -> np.ndarray:
    """``v^2/2 H''(theta0) + v^2/2 Im[L''(theta0)* L(theta0)]``."""
    L0, _, ddL, _, _, ddH = spec.taylor()
    return 0.5 * spec.v**2 * ddH + 0.5 * spec.v**2 * im(dag(ddL) @ L0)


def lan_family(spec: LANSpec, tol: float = DEFAULT_TOL) -> LANModels:
    k, v = float(spec.k), spec.v
    L0, dL, ddL, H0, dH, ddH = spec.taylor()
    L, H = spec.evaluate(spec.theta0 + v / k)
    G = SLHModel.build(None, [k * L], k**2 * H)
    phase = 0.5 * v**2 * im(dag(ddL) @ L0)
    H_tilde = k**2 * H0 + k * v * dH + 0.5 * v**2 * ddH + phase
    G_tilde = SLHModel.build(None, [k * L0 + v * dL], 0.5 * (H_tilde + dag(H_tilde)))
    delta = perturbation_between(G, G_tilde, tol)
    return LANModels(k, G, delta, G_tilde, phase=phase)


def polynomial_family(L_coeffs, H_coeffs):
    """``theta -> (sum_p L_p theta^p, sum_p H_p theta^p)`` together with its analytic derivatives."""
    Lc = [as_operator(c) for c in L_coeffs]
    Hc = [as_operator(c) for c in H_coeffs]

    def poly(cs, x, der=0):
        out = np.zeros_like(cs[0])
        for p, c in enumerate(cs):
            if p >= der:
                out = out + c * (np.prod(range(p - der + 1, p + 1)) if der else 1) * x ** (p - der)
        return out

    def family(x):
        return poly(Lc, x), poly(Hc, x)

    def derivatives(x):
        return poly(Lc, x, 1), poly(Lc, x, 2), poly(Hc, x, 1), poly(Hc, x, 2)

    return family, derivatives


# -- virtual work ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VirtualRotation:
    G_prime: SLHModel
    work: np.ndarray
    first_order: np.ndarray
    delta: SLHModel


def virtual_rotation(G: SLHModel, F, dphi: float, tol: float = DEFAULT_TOL) -> VirtualRotation:
    """Rotate ``(L, H)`` by ``exp(i F dphi)`` and record the virtual work of the change."""
    F = as_operator(F)
    U = func_of_hermitian(F, lambda w: np.exp(1j * w * dphi), tol)
    if np.linalg.norm(G.S_full - np.eye(G.n * G.d), 2) > tol:
        raise ValidationError("virtual rotation needs a model without scattering")
    L_rot = np.einsum("ab,ibc,cd->iad", U, G.L, dag(U))
    H_rot = U @ G.H @ dag(U)
    H_rot = 0.5 * (H_rot + dag(H_rot))
    delta = SLHModel(identity_blocks(G.n, G.d), L_rot - G.L, H_rot - G.H)
    return VirtualRotation(
        series(delta, G, tol),
        virtual_work(G, delta, tol),
        -lindblad(G, F) * dphi,
        delta,
    )
