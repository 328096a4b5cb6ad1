"""Acceptance gate.

One test per criterion. Each prints a single PASS/FAIL line with the measured
quantities and wall time, then asserts. Tolerances and runtime limits are pinned
below. Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from slhequiv.experiment import convergence_experiment, default_state
from slhequiv.families import (
    FaradaySpec,
    LANSpec,
    SqueezingSpec,
    bogoliubov,
    faraday_family,
    lan_family,
    lan_phase,
    polynomial_family,
    squeezing_family,
    virtual_rotation,
)
from slhequiv.operators import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, op_norm, vec
from slhequiv.oracle import SliceConfig, default_dt, oracle_distance
from slhequiv.semigroup import ExponentialState, delta_generator_on_identity, distance, transfer_generator
from slhequiv.slh import (
    SLHModel,
    damping,
    delta_residual,
    displace,
    gauge_transform,
    identity_model,
    inverse,
    left_residual,
    lindblad,
    series,
    series_damping,
)
from slhequiv.testing import random_gauge, random_hermitian, random_model, random_operator

# pinned tolerances
TOL_GROUP = 1e-10
TOL_GENERATOR = 1e-12
TOL_LEMMA = 1e-10
TOL_ZERO_COUPLING = 1e-6
TOL_DECOUPLED = 1e-10
HALVING_BAND = (0.4, 0.6)  # 1/2 +- 20%
TOL_BOGOLIUBOV = 1e-10
TOL_LAN_DISTANCE = 1e-8
TOL_LAN_PHASE = 1e-8
TOL_GAUGE = 1e-10
ORDER2_BAND = (3.5, 4.5)
LEFT_FLOOR = 0.5

# pinned runtime limits in seconds
LIMITS = {1: 5, 2: 5, 3: 10, 4: 300, 5: 60, 6: 60, 7: 60, 8: 10, 9: 5}

ZERO2 = np.zeros((2, 2))


@pytest.fixture
def report(capsys):
    def emit(num: int, title: str, ok: bool, detail: str, elapsed: float) -> bool:
        ok = ok and elapsed < LIMITS[num]
        line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {title} | {detail} | {elapsed:.2f}s (limit {LIMITS[num]}s)"
        with capsys.disabled():
            print("\n" + line, flush=True)
        return ok

    return emit


def _arr(x, precision: int) -> str:
    return np.array2string(np.asarray(x), precision=precision, max_line_width=10_000)


def _max(A) -> float:
    return float(np.max(np.abs(A)))


def _model_gap(G1, G2) -> float:
    return max(_max(G1.S - G2.S), _max(G1.L - G2.L), _max(G1.H - G2.H))


def _dims(rng):
    return int(rng.integers(1, 3)), int(rng.integers(1, 5))


def test_criterion_1_group_laws(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(100):
        n, d = _dims(rng)
        G1, G2, G3 = (random_model(rng, n, d) for _ in range(3))
        E = identity_model(n, d)
        worst = max(
            worst,
            _model_gap(series(series(G3, G2), G1), series(G3, series(G2, G1))),
            _model_gap(series(G1, E), G1),
            _model_gap(series(E, G1), G1),
            _model_gap(series(inverse(G1), G1), E),
            _model_gap(series(G1, inverse(G1)), E),
            _max(damping(series(G2, G1)).K - series_damping(damping(G2), damping(G1)).K),
        )
    ok = report(1, "series-product group laws on 100 random models", worst <= TOL_GROUP,
                 f"max residual {worst:.2e} (tol {TOL_GROUP:g})", time.perf_counter() - t0)
    assert ok


def test_criterion_2_generator_consistency(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(50):
        n, d = _dims(rng)
        G = random_model(rng, n, d)
        # column by column from the direct Lindblad formula
        cols = []
        for j in range(d * d):
            Ej = np.zeros(d * d, dtype=complex)
            Ej[j] = 1
            cols.append(vec(lindblad(G, Ej.reshape(d, d, order="F"))))
        worst = max(worst, _max(transfer_generator(G, G).superop.matrix - np.column_stack(cols)))
    ok = report(2, "transfer generator equals Lindbladian on 50 models", worst <= TOL_GENERATOR,
                 f"max entry gap {worst:.2e} (tol {TOL_GENERATOR:g})", time.perf_counter() - t0)
    assert ok


def test_criterion_3_lemma_closed_form(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1003)
    worst = 0.0
    for _ in range(50):
        n, d = _dims(rng)
        G, dG = random_model(rng, n, d), random_model(rng, n, d)
        alpha = rng.normal(size=n) + 1j * rng.normal(size=n)
        via_T = transfer_generator(displace(series(G, dG), alpha), displace(G, alpha))(np.eye(d))
        worst = max(worst, _max(via_T - delta_generator_on_identity(G, dG, alpha)))
    ok = report(3, "closed-form perturbed generator on I over 50 triples", worst <= TOL_LEMMA,
                 f"max gap {worst:.2e} (tol {TOL_LEMMA:g})", time.perf_counter() - t0)
    assert ok


def test_criterion_4_oracle_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1004)
    misses, ratios = 0, []
    for _ in range(20):
        Ga, Gb = random_model(rng, 1, 2), random_model(rng, 1, 2)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        t = float(rng.choice([0.5, 0.75, 1.0]))
        psi = ExponentialState(v, ((t / 2, [rng.normal()]), (t, [rng.normal() + 1j * rng.normal()])))
        cfg = SliceConfig(default_dt((Ga, Gb), psi, t))
        value, err = oracle_distance(Ga, Gb, psi, t, cfg)
        gap = abs(value - distance(Ga, Gb, psi, t))
        ratios.append(gap / err)
        misses += gap > err
    Ha, Hb = random_hermitian(rng, 2), random_hermitian(rng, 2)
    Za = SLHModel.build(None, [ZERO2], Ha)
    Zb = SLHModel.build(None, [ZERO2], Hb)
    psi0 = ExponentialState.constant([0.6, 0.8], [0.0], 1.0)
    w = np.linalg.eigh(Ha)
    u = np.linalg.eigh(Hb)
    Ua = w[1] @ np.diag(np.exp(-1j * w[0])) @ w[1].conj().T
    Ub = u[1] @ np.diag(np.exp(-1j * u[0])) @ u[1].conj().T
    exact = float(np.linalg.norm((Ua - Ub) @ psi0.v))
    zc_value, _ = oracle_distance(Za, Zb, psi0, 1.0, SliceConfig(0.05))
    zc_gap = abs(zc_value - exact)
    ok = misses == 0 and zc_gap <= TOL_ZERO_COUPLING
    ok = report(4, "engine vs collision oracle on 20 qubit instances + zero coupling", ok,
                 f"{20 - misses}/20 inside error bar (max gap/bar {max(ratios):.2f}); "
                 f"zero-coupling gap {zc_gap:.2e} (tol {TOL_ZERO_COUPLING:g})", time.perf_counter() - t0)
    assert ok


def test_criterion_5_faraday(report):
    t0 = time.perf_counter()
    ks = (2, 4, 8, 16, 32)
    spec = FaradaySpec(j=0.5, kappa=1.0, alpha=1.0)
    psi = default_state(2, 2, 1.0)
    rep = convergence_experiment(spec, ks, psi, 1.0, oracle=SliceConfig(1 / 128), name="faraday")
    d, r = rep.distances, rep.delta_residuals
    decreasing = rep.strictly_decreasing()
    ratio = d[-1] / d[0]
    halvings = r[1:] / r[:-1]
    halving_ok = bool(np.all((halvings >= HALVING_BAND[0]) & (halvings <= HALVING_BAND[1])))
    gap = max(_model_gap(f.G_tilde, f.decoupled) for f in (faraday_family(spec.at(k)) for k in ks))
    first = rep.rows[0]
    oracle_ok = abs(first.oracle_value - first.distance) <= first.oracle_error
    ok = decreasing and ratio <= 0.1 and halving_ok and gap <= TOL_DECOUPLED and oracle_ok
    ok = report(5, "Faraday sequence converges", ok,
                 f"distances {_arr(d, 4)}; d(32)/d(2)={ratio:.4f} (<=0.1); "
                 f"residual ratios {_arr(halvings, 3)}; decoupled gap {gap:.1e}; "
                 f"oracle at k=2 {first.oracle_value:.6f}+-{first.oracle_error:.1e}", time.perf_counter() - t0)
    assert ok


def test_criterion_6_squeezing(report):
    t0 = time.perf_counter()
    ns = (1, 4, 16, 64, 256)
    spec = SqueezingSpec(SIGMA_MINUS, ZERO2, np.pi / 2)
    psi = default_state(1, 2, 0.5)
    rep = convergence_experiment(spec, ns, psi, 0.5, name="squeezing")
    d = rep.distances
    fams = [squeezing_family(spec.at(n)) for n in ns]
    F_norms = np.array([op_norm(f.F) for f in fams])
    sqrt_fit = F_norms / np.sqrt(ns)
    F_ok = bool(np.all(np.diff(F_norms) > 0)) and np.ptp(sqrt_fit) <= 1e-10 * sqrt_fit[0]
    bog = 0.0
    for n in ns:
        u, v, m, _ = bogoliubov(n, np.pi / 2)
        bog = max(bog, abs(abs(u) ** 2 - (n + 1)), abs(abs(v) ** 2 - n), abs(u * v - m))
    H_gaps = np.array([op_norm(f.H_n - f.H_limit) for f in fams])
    H_ok = bool(np.all(np.diff(H_gaps) < 0))
    ok = rep.strictly_decreasing() and d[-1] / d[0] <= 0.2 and F_ok and bog <= TOL_BOGOLIUBOV and H_ok
    ok = report(6, "squeezing sequence converges while F diverges", ok,
                 f"distances {_arr(d, 4)}; final/initial {d[-1] / d[0]:.4f} (<=0.2); "
                 f"||F||/sqrt(n) spread {np.ptp(sqrt_fit):.1e}; Bogoliubov residual {bog:.1e}; "
                 f"||H_n - H'|| {_arr(H_gaps, 2)}", time.perf_counter() - t0)
    assert ok


def test_criterion_7_lan(report):
    t0 = time.perf_counter()
    ks = (1, 2, 4, 8, 16, 32)
    lin, lin_d = polynomial_family([ZERO2, SIGMA_MINUS], [ZERO2])
    lin_spec = LANSpec(lin, 0.3, 1.0, derivatives=lin_d)
    psi = default_state(1, 2, 1.0)
    rep = convergence_experiment(lin_spec, ks, psi, 1.0, name="lan-linear")
    lin_residual = max(delta_residual(lan_family(lin_spec.at(k)).delta) for k in ks)
    lin_ok = lin_residual <= 1e-10 and float(np.max(rep.distances)) <= TOL_LAN_DISTANCE

    theta0, v = 0.6, 1.2
    quad, quad_d = polynomial_family([ZERO2, SIGMA_MINUS, 1j * SIGMA_MINUS], [ZERO2])
    quad_spec = LANSpec(quad, theta0, v, derivatives=quad_d)
    phase_gap = _max(lan_phase(quad_spec) - (-(v**2) * theta0 * SIGMA_PLUS @ SIGMA_MINUS))
    quad_fd_gap = _max(lan_phase(LANSpec(quad, theta0, v)) - (-(v**2) * theta0 * SIGMA_PLUS @ SIGMA_MINUS))
    # the quadratic family has zero Taylor remainder, so the decay is checked on a transcendental family too
    quad_rem = max(op_norm(x) for k in ks for x in quad_spec.remainders(k))

    def trans(x):
        return (x + 1j * np.sin(x) ** 2) * SIGMA_MINUS, np.cos(x) * SIGMA_Z

    def trans_d(x):
        s2 = np.sin(2 * x)
        return (1 + 1j * s2) * SIGMA_MINUS, 2j * np.cos(2 * x) * SIGMA_MINUS, -np.sin(x) * SIGMA_Z, -np.cos(x) * SIGMA_Z

    tspec = LANSpec(trans, theta0, v, derivatives=trans_d)
    rem = np.array([[op_norm(x) for x in tspec.remainders(k)] for k in ks])
    rem_ok = bool(np.all(np.diff(rem, axis=0) < 0)) and quad_rem <= 1e-12
    ok = lin_ok and phase_gap <= TOL_LAN_PHASE and quad_fd_gap <= TOL_LAN_PHASE and rem_ok
    ok = report(7, "LAN scaling", ok,
                 f"linear: max delta residual {lin_residual:.1e}, max distance {np.max(rep.distances):.1e} "
                 f"(tol {TOL_LAN_DISTANCE:g}); phase gap analytic {phase_gap:.1e} / finite-diff {quad_fd_gap:.1e}; "
                 f"quadratic remainder {quad_rem:.1e}; transcendental k^2 R_L {np.array2string(rem[:, 0], precision=3)}",
                 time.perf_counter() - t0)
    assert ok


def test_criterion_8_virtual_work(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1008)
    gauge = 0.0
    for _ in range(50):
        n, d = _dims(rng)
        G = random_model(rng, n, d)
        X = random_operator(rng, d)
        gauge = max(gauge, _max(lindblad(gauge_transform(random_gauge(rng, n), G), X) - lindblad(G, X)))
    G = random_model(rng, 2, 3, scattering=False)
    F = random_hermitian(rng, 3)
    dphis = (0.02, 0.01, 0.005)
    res = [op_norm(vr.work - vr.first_order) for vr in (virtual_rotation(G, F, p) for p in dphis)]
    order = np.array(res[:-1]) / np.array(res[1:])
    order_ok = bool(np.all((order >= ORDER2_BAND[0]) & (order <= ORDER2_BAND[1])))
    # conserved but non-commuting observable: no first-order work
    L = np.zeros((3, 3), dtype=complex)
    L[0, 2] = 1.0
    Fc = np.diag([1.0, 0.0, 1.0]) + np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    Gc = SLHModel.build(None, [L], np.zeros((3, 3)))
    work = [op_norm(virtual_rotation(Gc, Fc, p).work) for p in dphis]
    per_dphi = np.array(work) / np.array(dphis)
    cons_ok = _max(lindblad(Gc, Fc)) == 0 and bool(np.all(np.diff(per_dphi) < 0)) and per_dphi[-1] < 1e-3
    ok = gauge <= TOL_GAUGE and order_ok and cons_ok
    ok = report(8, "virtual work", ok,
                 f"gauge gap {gauge:.1e} (tol {TOL_GAUGE:g}); halving ratios {_arr(order, 3)}; "
                 f"conserved-F work/dphi {_arr(per_dphi, 2)}", time.perf_counter() - t0)
    assert ok


def test_criterion_9_left_residual(report):
    t0 = time.perf_counter()
    ks = (1, 2, 4, 8, 16, 32, 64)
    rng = np.random.default_rng(1009)
    G = random_model(rng, 1, 2)
    dL, dH = random_operator(rng, 2), random_hermitian(rng, 2)
    fixed_ks = (1, 4, 16, 64, 256, 1024)
    fixed = np.array([op_norm(left_residual(G, SLHModel.build(None, [dL / k], dH / k), [0.7])) for k in fixed_ks])
    fixed_ok = bool(np.all(np.diff(fixed) < 0)) and fixed[-1] < 1e-2 * fixed[0]

    def scalar(L):
        return SLHModel.build(None, [[[L]]], None, n=1, d=1)

    competing = np.array([op_norm(left_residual(scalar(k), scalar(1 / k), [1.0])) for k in ks])
    term = [abs(np.conj(k) * (1 / k)) for k in ks]
    competing_ok = bool(np.all(competing >= LEFT_FLOOR))
    ok = report(9, "left-residual discrimination", fixed_ok and competing_ok,
                 f"fixed G: {_arr(fixed, 2)} (-> 0: {fixed_ok}); "
                 f"L=kI, dL=I/k: {_arr(competing, 4)} (>= {LEFT_FLOOR} required: {competing_ok}); "
                 f"the L*dL term alone stays at {term[0]:.1f}", time.perf_counter() - t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
