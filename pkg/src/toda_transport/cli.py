"""Command-line front end.

Subcommands: cumulants, distribution, noise, painleve, nonideal,
montecarlo, verify.  Exit codes: 0 success, 1 engine or usage error,
2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .asymptotics import kappa_asymptotic
from .cumulants import conductance_cumulants, joint_cumulants, noise_power_closed_forms, shot_limit
from .montecarlo import (cue_observables, dump_raw, estimate_cumulants, heidelberg_smatrix, observables,
                         report_records)
from .nonideal import TunnelConfig, mgf_nonideal, reflection_density
from .painleve import integrate_chazy
from .params import SHOT, LeadConfig, lead_config, thermo_factor
from .symbolic import density_from_mgf, mgf_hankel
from .verification import run_suite

COMMANDS = ("cumulants", "distribution", "noise", "painleve", "nonideal", "montecarlo", "verify")
IDEAL_ONLY = {"cumulants", "distribution", "noise", "painleve"}


class UsageError(ValueError):
    pass


@dataclass
class RunSpec:
    """Everything a subcommand needs; round-trips through ``to_dict``."""

    command: str
    N_L: int = 1
    N_R: int = 1
    L: int = 4
    M: int = 2
    eta: str = "inf"
    gamma2: float | None = None
    z: list = field(default_factory=list)
    seed: int = 0
    workers: int = 1
    samples: int = 100_000
    matrix_size: int = 400
    z0: float = 0.05
    z1: float = 5.0
    tol: float = 1e-12
    grid: int = 21
    suite: str = "ideal"
    perturb: float = 0.0
    asymptotic: bool = False
    mc: bool = False
    no_fallback: bool = False
    density: bool = False
    raw: str | None = None
    format: str = "text"
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        if self.gamma2 is not None and self.command in IDEAL_ONLY:
            raise UsageError(f"--gamma2 does not apply to '{self.command}' (ideal leads only)")
        if self.N_L < 1 or self.N_R < 1:
            raise UsageError("--nl and --nr must be positive")
        if self.L < 0 or self.M < 0:
            raise UsageError("-L and -M must be non-negative")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if self.format not in ("text", "json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        thermo_factor(self.eta)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunSpec":
        return cls(**data)

    @property
    def lead(self) -> LeadConfig:
        return lead_config(self.N_L, self.N_R)

    @property
    def tunnel(self) -> TunnelConfig:
        return TunnelConfig(self.N_L, self.N_R, 0.0 if self.gamma2 is None else self.gamma2)


# -- rendering ------------------------------------------------------------------

def render_rational(q) -> dict:
    q = Fraction(q)
    ctx = Context(prec=20)
    dec = ctx.divide(Decimal(q.numerator), Decimal(q.denominator))
    return {"exact": f"{q.numerator}/{q.denominator}", "decimal": format(dec, "g")}


def _config_dict(cfg: LeadConfig, gamma2=None) -> dict:
    return {"NL": cfg.N_L, "NR": cfg.N_R, "n": cfg.n, "nu": int(cfg.nu), "gamma2": gamma2}


def validate(payload: dict) -> None:
    text = resources.files("toda_transport.schemas").joinpath(f"{payload['command']}.schema.json").read_text()
    jsonschema.validate(payload, json.loads(text))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- subcommands ------------------------------------------------------------------

def cmd_cumulants(spec: RunSpec):
    cfg = spec.lead
    seq = conductance_cumulants(cfg, spec.L, fallback=not spec.no_fallback)
    mc = {}
    if spec.mc:
        G, _ = cue_observables(spec.N_L, spec.N_R, spec.samples, spec.seed, spec.workers)
        mc = {e.order: e for e in estimate_cumulants(G, min(spec.L, 6))}
    rows = []
    for ell in range(1, spec.L + 1):
        est = mc.get(ell)
        rows.append({"order": ell, "value": render_rational(seq[ell]), "from_series": ell in seq.series_orders,
                     "asymptotic": float(kappa_asymptotic(ell, cfg).value) if spec.asymptotic else None,
                     "mc_estimate": None if est is None else float(est.estimate),
                     "mc_stderr": None if est is None else est.stderr})
    payload = {"command": "cumulants", "config": _config_dict(cfg), "series_orders": list(seq.series_orders),
               "cumulants": rows}
    text_rows = [[r["order"], str(seq[r["order"]]), r["value"]["decimal"]]
                 + ([repr(r["asymptotic"])] if spec.asymptotic else [])
                 + ([r["mc_estimate"], r["mc_stderr"]] if spec.mc else []) for r in rows]
    header = ["order", "exact", "decimal"] + (["asymptotic"] if spec.asymptotic else []) \
        + (["mc_estimate", "mc_stderr"] if spec.mc else [])
    return payload, header, text_rows


def cmd_distribution(spec: RunSpec):
    cfg = spec.lead
    dens = density_from_mgf(mgf_hankel(cfg), cfg)
    g = np.linspace(0.0, cfg.n, max(spec.grid, 2))
    pdf = dens.pdf(g)
    d = dens.to_dict()
    payload = {"command": "distribution", "config": _config_dict(cfg), "sgn_polys": d["sgn_polys"],
               "heaviside_polys": d["heaviside_polys"],
               "grid": [{"g": float(a), "pdf": float(b)} for a, b in zip(g, pdf)]}
    return payload, ["g", "pdf"], [[repr(float(a)), repr(float(b))] for a, b in zip(g, pdf)]


def _poly_text(poly) -> str:
    terms = [f"{c}" if j == 0 else f"({c}) f^{j}" for j, c in enumerate(poly.coeffs) if c]
    return " + ".join(terms) or "0"


def cmd_noise(spec: RunSpec):
    cfg = spec.lead
    table = joint_cumulants(cfg, spec.L, spec.M)
    tf = thermo_factor(spec.eta)
    f = None if tf is SHOT else tf.f_eta
    shot = shot_limit(table)
    entries = []
    for (l, m), poly in sorted(table.entries.items()):
        value = float(shot[(l, m)]) if f is None else float(poly(f))
        entries.append({"l": l, "m": m, "poly": poly.to_strings(), "value": value,
                        "shot": render_rational(shot[(l, m)])})
    mean = noise_power_closed_forms(cfg, 0)["mean_noise"]
    payload = {"command": "noise", "config": _config_dict(cfg), "eta": str(spec.eta), "f_eta": f,
               "boundary_order": table.boundary_order, "entries": entries, "mean_noise": repr(mean)}
    rows = [[l, m, _poly_text(table.entries[(l, m)]), repr(e["value"]), str(shot[(l, m)])]
            for e in entries for l, m in [(e["l"], e["m"])]]
    return payload, ["l", "m", "poly_in_f", "value", "shot"], rows


def cmd_painleve(spec: RunSpec):
    cfg = spec.lead
    sol = integrate_chazy(cfg, spec.z0, spec.z1, spec.tol)
    res = sol.jmo_residuals()
    rows = [{"z": float(z), "sigma": float(a), "dsigma": float(b), "d2sigma": float(c), "log_mgf": float(d),
             "jmo_residual": float(r)}
            for z, a, b, c, d, r in zip(sol.grid, sol.sigma, sol.dsigma, sol.d2sigma, sol.log_mgf, res)]
    payload = {"command": "painleve", "config": _config_dict(cfg), "z0": spec.z0, "z1": spec.z1, "tol": spec.tol,
               "handoff": sol.handoff, "max_jmo_residual": float(np.max(np.abs(res))), "rows": rows}
    header = ["z", "sigma", "dsigma", "d2sigma", "log_mgf", "jmo_residual"]
    return payload, header, [[repr(r[k]) for k in header] for r in rows]


def cmd_nonideal(spec: RunSpec):
    cfg = spec.tunnel
    zs = spec.z or [0.0, 0.5, 1.0, 2.0]
    records = [{"NL": cfg.N_L, "NR": cfg.N_R, "gamma2": cfg.gamma2, "z": float(z), "mgf": mgf_nonideal(cfg, float(z))}
               for z in zs]
    payload = {"command": "nonideal", "records": records}
    if spec.density:
        R = np.linspace(0.0, 1.0, max(spec.grid, 2) + 2)[1:-1]
        pdf = reflection_density(R, cfg)
        payload["density"] = [{"R": float(a), "pdf": float(b)} for a, b in zip(R, pdf)]
        return payload, ["R", "pdf"], [[repr(d["R"]), repr(d["pdf"])] for d in payload["density"]]
    header = ["NL", "NR", "gamma2", "z", "mgf"]
    return payload, header, [[r[k] for k in header] for r in records]


def cmd_montecarlo(spec: RunSpec):
    L = min(max(spec.L, 1), 6)
    if spec.gamma2 is None:
        cfg = spec.lead
        G, P_shot = cue_observables(spec.N_L, spec.N_R, spec.samples, spec.seed, spec.workers)
        exactG = conductance_cumulants(cfg, L)
        table = joint_cumulants(cfg, 0, L)
        exactP = shot_limit(table)
        series = {"G": (G, [float(exactG[l]) for l in range(1, L + 1)]),
                  "P_shot": (P_shot, [float(exactP[(0, m)]) for m in range(1, L + 1)])}
        model = "cue"
        config = _config_dict(cfg)
    else:
        cfg = spec.tunnel
        rng = np.random.default_rng(spec.seed)
        smp = heidelberg_smatrix(spec.matrix_size, cfg, rng, spec.samples)
        G, P_shot, _ = observables(smp)
        series = {"G": (G, None), "P_shot": (P_shot, None), "R_mean": (smp.R.mean(axis=1), None)}
        model = "heidelberg"
        config = {"NL": cfg.N_L, "NR": cfg.N_R, "n": min(cfg.N_L, cfg.N_R), "nu": cfg.nu, "gamma2": cfg.gamma2}
    reports = []
    for name, (values, exact) in series.items():
        for rec, est in zip(report_records(name, estimate_cumulants(values, L), spec.seed),
                            estimate_cumulants(values, L)):
            ex = exact[est.order - 1] if exact else None
            rec["exact"] = ex
            rec["z_score"] = None if ex is None else (est.estimate - ex) / est.stderr
            reports.append(rec)
    if spec.raw:
        dump_raw(spec.raw, np.stack([G, P_shot], axis=1))
    payload = {"command": "montecarlo", "model": model, "config": config, "reports": reports}
    header = ["observable", "order", "estimate", "stderr", "exact", "z_score"]
    return payload, header, [[r[k] for k in header] for r in reports]


def cmd_verify(spec: RunSpec):
    checks = run_suite(spec.suite, N_L=spec.N_L, N_R=spec.N_R,
                       gamma2=0.0 if spec.gamma2 is None else spec.gamma2, perturb=spec.perturb,
                       mc_samples=spec.samples, seed=spec.seed, workers=spec.workers)
    payload = {"command": "verify", "suite": spec.suite, "passed": all(c.passed for c in checks),
               "checks": [c.to_dict() for c in checks]}
    header = ["check", "status", "measured", "tolerance"]
    rows = [[c.name, "PASS" if c.passed else "FAIL", c.measured, c.tolerance] for c in checks]
    return payload, header, rows


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nl", dest="N_L", type=int, default=1, help="channels in the left lead")
    common.add_argument("--nr", dest="N_R", type=int, default=1, help="channels in the right lead")
    common.add_argument("--eta", default="inf", help="eV/2kT, a number or 'inf' (shot noise)")
    common.add_argument("--gamma2", type=float, default=None, help="1 - tunnel probability of the left lead")
    common.add_argument("-L", type=int, default=4, help="highest conductance order")
    common.add_argument("-M", type=int, default=2, help="highest noise order")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1, help="processes for Monte Carlo sampling")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = _Parser(prog="toda-transport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("cumulants", parents=[common], help="exact conductance cumulants")
    p.add_argument("--asymptotic", action="store_true", help="add the large-n expansion column")
    p.add_argument("--no-fallback", action="store_true", help="raise at the singular recurrence order")
    p.add_argument("--mc", action="store_true", help="add Monte Carlo estimates (CUE)")
    p.add_argument("--samples", type=int, default=100_000)
    p = sub.add_parser("distribution", parents=[common], help="piecewise-polynomial conductance density")
    p.add_argument("--grid", type=int, default=21, help="number of grid points for the density")
    sub.add_parser("noise", parents=[common], help="joint conductance/noise cumulants")
    p = sub.add_parser("painleve", parents=[common], help="sigma function by ODE integration")
    p.add_argument("--z0", type=float, default=0.05)
    p.add_argument("--z1", type=float, default=5.0)
    p.add_argument("--tol", type=float, default=1e-12)
    p = sub.add_parser("nonideal", parents=[common], help="tunnel-coupled lead MGF and density")
    p.add_argument("--z", type=_float_list, default=[], help="comma-separated z values")
    p.add_argument("--density", action="store_true", help="emit the reflection density instead")
    p.add_argument("--grid", type=int, default=21)
    p = sub.add_parser("montecarlo", parents=[common], help="random-matrix sampling oracle")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--matrix-size", type=int, default=400, help="Hamiltonian size (with --gamma2)")
    p.add_argument("--raw", default=None, help="dump (G, P_shot) pairs as little-endian float64")
    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("--suite", choices=("ideal", "nonideal", "all"), default="ideal")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def parse_spec(argv=None) -> RunSpec:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    known = set(RunSpec.__dataclass_fields__)
    try:
        return RunSpec(**{k: v for k, v in args.items() if k in known})
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))


def _emit(spec: RunSpec, payload, header, rows) -> None:
    if spec.format == "json":
        validate(payload)
        text = json.dumps(payload, indent=1) + "\n"
    elif spec.format == "csv":
        text = _csv(rows, header)
    else:
        widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
                  for i, h in enumerate(header)]
        lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(str(v).ljust(w) for v, w in zip(r, widths)) for r in rows]
        text = "\n".join(lines) + "\n"
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    spec = parse_spec(argv)
    try:
        payload, header, rows = HANDLERS[spec.command](spec)
        _emit(spec, payload, header, rows)
    except (ArithmeticError, ValueError, RuntimeError, NotImplementedError, np.linalg.LinAlgError,
            jsonschema.ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if spec.command == "verify" and not payload["passed"]:
        return 2
    return 0
