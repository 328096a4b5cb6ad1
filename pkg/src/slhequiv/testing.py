"""Seeded random generators for valid models, used by tests and the acceptance gate."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .slh import GaugeElement, SLHModel


def random_operator(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2 * d)


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    A = random_operator(rng, d, scale)
    return 0.5 * (A + A.conj().T)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(dim, random_state=rng)


def random_model(
    rng: np.random.Generator,
    n: int,
    d: int,
    scattering: bool = True,
    scale: float = 1.0,
) -> SLHModel:
    """Valid model with Haar-random ``S`` (or ``I``) and Gaussian ``L``, ``H``."""
    S = random_unitary(rng, n * d) if scattering else None
    L = [random_operator(rng, d, scale) for _ in range(n)]
    return SLHModel.build(S, L, random_hermitian(rng, d, scale), n=n, d=d)


def random_gauge(rng: np.random.Generator, n: int) -> GaugeElement:
    return GaugeElement(
        random_unitary(rng, n),
        rng.normal(size=n) + 1j * rng.normal(size=n),
        float(rng.normal()),
    )
