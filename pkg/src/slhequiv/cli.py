"""Command-line runner.

Exit status 0 on success, 2 for malformed input or arguments, 3 when a model
fails validation, 4 on numerical breakdown. Failures print one JSON record
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NumericalBreakdown, ValidationError
from .experiment import _fmt, convergence_experiment, default_state, sequence
from .families import FaradaySpec, LANSpec, SqueezingSpec, polynomial_family, virtual_rotation
from .operators import DEFAULT_TOL, SIGMA_MINUS, op_norm, operator_from_json, vector_to_json
from .oracle import SliceConfig, cross_state, default_dt, oracle_distance
from .semigroup import ExponentialState, distance, overlap
from .slh import SLHModel, validate

COMMANDS = ("validate", "distance", "oracle-check", "squeezing", "faraday", "lan", "virtual-work")
DEFAULT_KS = {
    "squeezing": (1, 4, 16, 64, 256),
    "faraday": (2, 4, 8, 16, 32),
    "lan": (1, 2, 4, 8, 16),
}
DEFAULT_T = {"squeezing": 0.5, "faraday": 1.0, "lan": 1.0}


class ParseError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    t: Optional[float] = None
    ks: Optional[tuple] = None
    tol: float = DEFAULT_TOL
    oracle_dt: Optional[float] = None
    oracle_dnoise: Optional[int] = None
    oracle_scheme: str = "exponential-midpoint"
    diagnostics: Optional[str] = None
    resolved: dict = field(default_factory=dict)

    @property
    def wants_oracle(self) -> bool:
        return self.command == "oracle-check" or self.oracle_dt is not None or self.oracle_dnoise is not None

    def slice_config(self, models, psi, t) -> SliceConfig:
        dt = self.oracle_dt if self.oracle_dt is not None else default_dt(models, psi, t)
        return SliceConfig(dt, self.oracle_dnoise or 3, self.oracle_scheme)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _ks(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad index list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slh-equiv", description="Distances and convergence experiments for SLH model sequences.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", dest="input_path", help="JSON input file")
    p.add_argument("--output", dest="output_path", help="CSV or JSON output file (stdout when omitted)")
    p.add_argument("--t", type=float, help="time horizon")
    p.add_argument("--ks", type=_ks, help="comma separated index list, e.g. 2,4,8")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="validation tolerance")
    p.add_argument("--oracle-dt", type=float, help="collision-model step; enables the oracle cross-check")
    p.add_argument("--oracle-dnoise", type=int, help="Fock levels per slice; enables the oracle cross-check")
    p.add_argument("--oracle-scheme", default="exponential-midpoint", choices=("euler-ito", "exponential-midpoint"))
    p.add_argument("--diagnostics", help="write per-step norm deficits of the oracle run to this CSV")
    return p


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    if cfg.t is not None and not cfg.t > 0:
        raise ParseError("--t must be positive")
    if cfg.ks is not None and not cfg.ks:
        raise ParseError("--ks must be non-empty")
    if cfg.command in ("validate", "distance", "oracle-check", "virtual-work") and not cfg.input_path:
        raise ParseError(f"{cfg.command} needs --input")
    return cfg


def _load(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path} must hold a JSON object")
    return data


def _state(data: dict, n: int, d: int, t: float) -> ExponentialState:
    if "state" in data:
        return ExponentialState.from_json(data["state"])
    return default_state(n, d, t)


def _emit_json(cfg: RunConfig, result: dict):
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    _write(cfg, text)


def _write(cfg: RunConfig, text: str):
    if cfg.output_path is None:
        sys.stdout.write(text)
        return
    with open(cfg.output_path, "w", newline="") as fh:
        fh.write(text)
    sidecar = {
        "command": cfg.command,
        "input": cfg.input_path,
        "t": cfg.t,
        "ks": list(cfg.ks) if cfg.ks else None,
        "tol": cfg.tol,
        **cfg.resolved,
    }
    with open(cfg.output_path + ".config.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- commands ---------------------------------------------------------------------------


def _cmd_validate(cfg: RunConfig) -> int:
    G = SLHModel.from_json(_load(cfg.input_path), cfg.tol, check=False)
    found = validate(G, cfg.tol)
    _emit_json(cfg, {
        "n": G.n,
        "d": G.d,
        "valid": not found,
        "violations": [{"kind": v.kind, "block": v.block, "residual": v.residual} for v in found],
    })
    return 3 if found else 0


def _pair(cfg: RunConfig):
    data = _load(cfg.input_path)
    try:
        Ga = SLHModel.from_json(data["Ga"], cfg.tol)
        Gb = SLHModel.from_json(data["Gb"], cfg.tol)
    except KeyError as exc:
        raise ParseError(f"input is missing {exc}") from exc
    if (Ga.n, Ga.d) != (Gb.n, Gb.d):
        raise DimensionMismatch("Ga and Gb differ in (n, d)")
    t = cfg.t
    if t is None:
        t = ExponentialState.from_json(data["state"]).horizon if "state" in data else 1.0
    psi = _state(data, Ga.n, Ga.d, t)
    cfg.t = t
    cfg.resolved["state"] = psi.to_json()
    return Ga, Gb, psi, t


def _cmd_distance(cfg: RunConfig) -> int:
    Ga, Gb, psi, t = _pair(cfg)
    ov = overlap(Ga, Gb, psi, t)
    _emit_json(cfg, {"distance": distance(Ga, Gb, psi, t), "overlap": [ov.real, ov.imag], "norm_sq": psi.norm_sq()})
    return 0


def _cmd_oracle_check(cfg: RunConfig) -> int:
    Ga, Gb, psi, t = _pair(cfg)
    sc = cfg.slice_config((Ga, Gb), psi, t)
    cfg.resolved["oracle"] = {"dt": sc.dt, "d_noise": sc.d_noise, "scheme": sc.scheme}
    engine = distance(Ga, Gb, psi, t)
    value, err = oracle_distance(Ga, Gb, psi, t, sc)
    if cfg.diagnostics:
        cross_state(Ga, Gb, psi, t, sc).write_diagnostics(cfg.diagnostics)
    agree = abs(engine - value) <= err
    _emit_json(cfg, {"engine": engine, "oracle": value, "oracle_error": err, "agree": bool(agree)})
    return 0 if agree else 4


def _family_run(cfg: RunConfig, name: str, spec, n: int, d: int, data: dict) -> int:
    t = cfg.t if cfg.t is not None else float(data.get("t", DEFAULT_T[name]))
    ks = cfg.ks or DEFAULT_KS[name]
    cfg.t, cfg.ks = t, tuple(ks)
    psi = _state(data, n, d, t)
    sc = None
    if cfg.wants_oracle:
        eq = sequence(spec)(ks[0])
        sc = cfg.slice_config((eq.G, eq.G_tilde), psi, t)
    report = convergence_experiment(spec, ks, psi, t, oracle=sc, name=name)
    cfg.resolved.update({k: v for k, v in report.metadata.items() if k not in ("t", "ks")})
    _write(cfg, report.to_csv())
    return 0


def _operator(data: dict, key: str, default) -> np.ndarray:
    return operator_from_json(data[key]) if key in data else np.asarray(default, dtype=complex)


def _cmd_squeezing(cfg: RunConfig) -> int:
    data = _load(cfg.input_path)
    L = _operator(data, "L", SIGMA_MINUS)
    H = _operator(data, "H", np.zeros_like(L))
    spec = SqueezingSpec(L, H, float(data.get("theta", np.pi / 2)), theta_margin=float(data.get("theta_margin", 1e-3)))
    cfg.resolved["spec"] = {"L": data.get("L"), "H": data.get("H"), "theta": spec.theta, "theta_margin": spec.theta_margin}
    return _family_run(cfg, "squeezing", spec, 1, L.shape[0], data)


def _cmd_faraday(cfg: RunConfig) -> int:
    data = _load(cfg.input_path)
    alpha = data.get("alpha", 1.0)
    if isinstance(alpha, list):
        alpha = complex(*alpha)
    spec = FaradaySpec(float(data.get("j", 0.5)), float(data.get("kappa", 1.0)), alpha)
    cfg.resolved["spec"] = {"j": spec.j, "kappa": spec.kappa, "alpha": vector_to_json([spec.alpha])[0]}
    return _family_run(cfg, "faraday", spec, 2, int(round(2 * spec.j)) + 1, data)


def _cmd_lan(cfg: RunConfig) -> int:
    data = _load(cfg.input_path)
    if "L_coeffs" in data:
        Lc = [operator_from_json(c) for c in data["L_coeffs"]]
    else:
        Lc = [np.zeros((2, 2)), SIGMA_MINUS, 1j * SIGMA_MINUS]
    d = Lc[0].shape[0]
    Hc = [operator_from_json(c) for c in data["H_coeffs"]] if "H_coeffs" in data else [np.zeros((d, d))]
    family, derivs = polynomial_family(Lc, Hc)
    spec = LANSpec(family, float(data.get("theta0", 0.5)), float(data.get("v", 1.0)), derivatives=derivs)
    cfg.resolved["spec"] = {
        "L_coeffs": data.get("L_coeffs", "(theta + i theta^2) sigma_minus"),
        "H_coeffs": data.get("H_coeffs", "0"),
        "theta0": spec.theta0,
        "v": spec.v,
    }
    return _family_run(cfg, "lan", spec, 1, d, data)


def _cmd_virtual_work(cfg: RunConfig) -> int:
    data = _load(cfg.input_path)
    try:
        G = SLHModel.from_json(data["model"], cfg.tol)
        F = operator_from_json(data["F"])
    except KeyError as exc:
        raise ParseError(f"input is missing {exc}") from exc
    dphis = [float(x) for x in data.get("dphis", [0.1 / 2**p for p in range(5)])]
    cfg.resolved["dphis"] = dphis
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("dphi", "work_norm", "first_order_norm", "residual_norm"))
    for dphi in dphis:
        vr = virtual_rotation(G, F, dphi, cfg.tol)
        w.writerow([_fmt(dphi), _fmt(op_norm(vr.work)), _fmt(op_norm(vr.first_order)), _fmt(op_norm(vr.work - vr.first_order))])
    _write(cfg, buf.getvalue())
    return 0


HANDLERS = {
    "validate": _cmd_validate,
    "distance": _cmd_distance,
    "oracle-check": _cmd_oracle_check,
    "squeezing": _cmd_squeezing,
    "faraday": _cmd_faraday,
    "lan": _cmd_lan,
    "virtual-work": _cmd_virtual_work,
}


def _fail(status: int, kind: str, message: str, command: Optional[str] = None, **extra) -> int:
    record = {"status": status, "error": kind, "message": message, "command": command, **extra}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return status


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except ParseError as exc:
        return _fail(2, "parse", str(exc), cfg.command)
    except (KeyError, TypeError) as exc:
        return _fail(2, "parse", f"malformed input: {exc!r}", cfg.command)
    except ValidationError as exc:
        return _fail(3, "validation", str(exc), cfg.command, violations=[str(v) for v in exc.violations])
    except DimensionMismatch as exc:
        return _fail(3, "dimension", str(exc), cfg.command)
    except NumericalBreakdown as exc:
        return _fail(4, "numerical", str(exc), cfg.command)
    except ValueError as exc:
        return _fail(2, "parse", str(exc), cfg.command)


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except ParseError as exc:
        return _fail(2, "parse", str(exc))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
