"""Command-line front end.

Subcommands: ``eval``, ``sweep``, ``asymptotic``, ``slope``, ``mmse``,
``verify``. Exit codes: 0 success, 2 invalid input, 3 quadrature did not
converge, 4 an output row violated ``zz_novf <= zz_vf <= mmse``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__, kernels
from .asymptotics import high_noise_bound, low_noise_slope
from .channel import GaussianChannel
from .errors import OutsideSupportError, PreconditionError, SpecError
from .oracle import (check_unimodal_symmetric, check_zz_condition, mmse_linear_gaussian, mmse_monte_carlo,
                     mmse_quadrature_detail)
from .prior import RNG_NAME, ProductPrior, ScalarPrior, bernoulli, prior_from_dict
from .quadrature import QuadratureSpec
from .zzb import zz_product, zz_scalar, zz_scalar_both

EXIT_OK, EXIT_INVALID, EXIT_UNCONVERGED, EXIT_SANDWICH = 0, 2, 3, 4
SWEEP_COLUMNS = ["eta", "zz_novf", "zz_vf", "mmse", "ratio_novf", "ratio_vf"]

_SHORTHAND = {
    "gaussian": ("gaussian", ["mean", "var"]),
    "normal": ("gaussian", ["mean", "var"]),
    "uniform": ("uniform", ["a", "b"]),
    "exponential": ("exponential", ["rate"]),
    "logistic": ("logistic", ["loc", "scale"]),
}


class UsageError(Exception):
    """Invalid command-line input (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    prior: str
    eta: Optional[list] = None
    channel: Optional[str] = None
    M: int = 2
    valley_fill: bool = True
    quad: dict = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "json"
    seed: int = 0
    deterministic: bool = False
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _numbers(text: str, what: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"{what}: cannot parse {text!r} as comma-separated numbers") from exc


def parse_prior(text: str):
    """Inline shorthand (``gaussian:0,1``), a JSON literal, or a JSON file path."""
    text = text.strip()
    if text.startswith("{"):
        return prior_from_dict(_load_json(text, "<inline prior>"))
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return prior_from_dict(_load_json(fh.read(), text))
    if ":" not in text:
        raise SpecError(f"prior: {text!r} is neither a file nor family:params shorthand")
    fam, _, rest = text.partition(":")
    fam = fam.strip().lower()
    if fam == "bernoulli":
        vals = _numbers(rest, "bernoulli")
        if len(vals) != 1:
            raise SpecError("bernoulli: expected one parameter p")
        return bernoulli(vals[0])
    if fam == "atoms":
        rows = []
        for item in rest.split(","):
            loc, sep, mass = item.partition("@")
            if not sep:
                raise SpecError("atoms: expected entries of the form x@p")
            rows.append([float(loc), float(mass)])
        return prior_from_dict({"atoms": rows})
    if fam not in _SHORTHAND:
        raise SpecError(f"prior: unknown shorthand family {fam!r}")
    name, keys = _SHORTHAND[fam]
    vals = _numbers(rest, fam)
    if len(vals) != len(keys):
        raise SpecError(f"{fam}: expected {len(keys)} parameters ({', '.join(keys)})")
    return prior_from_dict({"family": name, "params": dict(zip(keys, vals))})


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def parse_channel(cfg: RunConfig) -> GaussianChannel:
    if cfg.channel:
        src = cfg.channel
        text = open(src, encoding="utf-8").read() if os.path.exists(src) else src
        return GaussianChannel.from_dict(_load_json(text, src))
    if not cfg.eta:
        raise SpecError("either --eta or --channel is required")
    return GaussianChannel(cfg.eta[0])


def build_quad(cfg: RunConfig) -> QuadratureSpec:
    kw = {k: v for k, v in cfg.quad.items() if v is not None}
    if "extra_t_nodes" in kw:
        kw["extra_t_nodes"] = tuple(kw["extra_t_nodes"])
    return QuadratureSpec(**kw)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _metadata(cfg: RunConfig) -> dict:
    meta = {
        "tool": "zzbound",
        "version": __version__,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "kernel_backend": kernels.BACKEND,
    }
    if not cfg.deterministic:
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return meta


def _sandwich_ok(novf: float, vf: float, mmse: float, tol: float) -> bool:
    return novf <= vf + tol and vf <= mmse + tol


def _sweep_row(args):
    prior_text, eta, M, quad_kw = args
    prior = parse_prior(prior_text)
    quad = QuadratureSpec(**quad_kw)
    ch = GaussianChannel(eta)
    if isinstance(prior, ProductPrior):
        novf = zz_product(prior, [ch] * prior.dim, M, False, quad)
        vf = zz_product(prior, [ch] * prior.dim, M, True, quad)
        mm = [mmse_quadrature_detail(f, ch, quad) for f in prior.factors]
        mmse, ok = sum(m.value for m in mm), all(m.converged for m in mm)
    else:
        novf, vf = zz_scalar_both(prior, ch, M, quad)
        m = mmse_quadrature_detail(prior, ch, quad)
        mmse, ok = m.value, m.converged
    return novf.value, vf.value, mmse, bool(novf.converged and vf.converged and ok)


def _ratio(a, b):
    return a / b if b > 0 else float("nan")


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        return _run(cfg, stdout)
    except (SpecError, PreconditionError, OutsideSupportError, UsageError, OSError) as exc:
        print(f"zzbound: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _emit(cfg: RunConfig, payload: dict, table: Optional[list], stdout) -> None:
    if cfg.format == "csv":
        if table is None:
            raise UsageError(f"{cfg.command} has no CSV form; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in table:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _run(cfg: RunConfig, stdout) -> int:
    if int(cfg.M) != cfg.M or cfg.M < 2:
        raise SpecError("--M must be an integer >= 2")
    if cfg.format not in ("json", "csv"):
        raise SpecError("--format must be json or csv")
    prior = parse_prior(cfg.prior)
    quad = build_quad(cfg)
    meta = _metadata(cfg)
    cmd = cfg.command

    if cmd == "eval":
        ch = parse_channel(cfg)
        if isinstance(prior, ProductPrior):
            rep = zz_product(prior, [GaussianChannel(ch.eta)] * prior.dim, cfg.M, cfg.valley_fill, quad)
        else:
            rep = zz_scalar(prior, ch, cfg.M, cfg.valley_fill, quad)
        dump = cfg.extras.get("dump_integrand")
        if dump:
            with open(dump, "w", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "h_ratio", "vf_ratio"])
                for reps in (rep.components or [rep]):
                    for row in reps.per_t:
                        w.writerow([repr(float(v)) for v in row])
        payload = {"meta": meta, "report": rep.to_dict(include_per_t=not cfg.extras.get("brief", False))}
        table = [["t", "h_ratio", "vf_ratio"]] + [list(r) for r in rep.per_t]
        _emit(cfg, payload, table, stdout)
        return EXIT_OK if rep.converged else EXIT_UNCONVERGED

    if cmd == "sweep":
        if not cfg.eta:
            raise SpecError("sweep needs --eta with a comma-separated list")
        jobs = max(1, int(cfg.extras.get("jobs", 1)))
        args = [(cfg.prior, float(e), cfg.M, asdict(quad)) for e in cfg.eta]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_sweep_row, args))
        else:
            results = [_sweep_row(a) for a in args]
        tol = 2 * quad.refine_tol
        rows, converged = [], True
        for eta, (novf, vf, mm, ok) in zip(cfg.eta, results):
            if not _sandwich_ok(novf, vf, mm, tol):
                print(f"zzbound: internal consistency failure at eta={eta}: "
                      f"zz_novf={novf!r} zz_vf={vf!r} mmse={mm!r}", file=sys.stderr)
                return EXIT_SANDWICH
            rows.append([float(eta), novf, vf, mm, _ratio(novf, mm), _ratio(vf, mm)])
            converged &= ok
        payload = {"meta": meta, "columns": SWEEP_COLUMNS, "rows": rows, "converged": converged}
        _emit(cfg, payload, [SWEEP_COLUMNS] + rows, stdout)
        return EXIT_OK if converged else EXIT_UNCONVERGED

    if cmd == "asymptotic":
        if not isinstance(prior, ScalarPrior):
            raise SpecError("asymptotic needs a scalar prior")
        rep = high_noise_bound(prior, cfg.M, cfg.valley_fill, quad, route=cfg.extras.get("route", "overlap"),
                               center=bool(cfg.extras.get("center", False)))
        payload = {"meta": meta, "report": rep.to_dict()}
        table = [["t", "value"]] + [[float(r[0]), float(r[1])] for r in rep.per_t]
        _emit(cfg, payload, table, stdout)
        return EXIT_OK if rep.converged else EXIT_UNCONVERGED

    if cmd == "slope":
        if not cfg.eta:
            raise SpecError("slope needs --eta with a decreasing comma-separated list")
        entries = low_noise_slope(prior, cfg.eta, quad)
        rows = [[e.eta, e.zz_over_eta] for e in entries]
        payload = {"meta": meta, "columns": ["eta", "value"], "rows": rows,
                   "converged": [e.converged for e in entries]}
        _emit(cfg, payload, [["eta", "value"]] + rows, stdout)
        return EXIT_OK if all(e.converged for e in entries) else EXIT_UNCONVERGED

    if cmd == "mmse":
        if not isinstance(prior, ScalarPrior):
            raise SpecError("mmse needs a scalar prior")
        ch = parse_channel(cfg)
        n = int(cfg.extras.get("n", 10**6))
        q = mmse_quadrature_detail(prior, ch, quad)
        est, se = mmse_monte_carlo(prior, ch, n, cfg.seed)
        result = {"quadrature": q.value, "quadrature_converged": q.converged,
                  "monte_carlo": est, "monte_carlo_std_error": se, "n": n}
        if prior.alpha == 1.0 and prior.continuous.family == "gaussian":
            result["linear_gaussian"] = mmse_linear_gaussian(prior.var, ch.eta)
        table = [["method", "value", "std_error"], ["quadrature", q.value, 0.0], ["monte_carlo", est, se]]
        _emit(cfg, {"meta": meta, "mmse": result}, table, stdout)
        return EXIT_OK if q.converged else EXIT_UNCONVERGED

    if cmd == "verify":
        if not isinstance(prior, ScalarPrior):
            raise SpecError("verify needs a scalar prior")
        ch = parse_channel(cfg)
        which = cfg.extras.get("check", "both")
        out = {}
        if which in ("unimodal", "both"):
            out["unimodal_symmetric"] = check_unimodal_symmetric(prior, ch, quad=quad).to_dict()
        if which in ("zz", "both"):
            t_list = cfg.extras.get("t_list") or list(np.linspace(0.25, 4 * max(prior.std, 1e-3), 16))
            out["zz_condition"] = check_zz_condition(prior, ch, t_list, cfg.M, quad=quad).to_dict()
        table = [["check", "pass"]] + [[k, v["pass"]] for k, v in out.items()]
        _emit(cfg, {"meta": meta, "checks": out}, table, stdout)
        return EXIT_OK

    raise UsageError(f"unknown command {cmd!r}")


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, eta_list: bool = False) -> None:
    p.add_argument("--prior", required=True, help="family:params shorthand, JSON literal, or JSON file")
    p.add_argument("--eta", help="noise level" + (" list (comma-separated)" if eta_list else ""))
    p.add_argument("--channel", help="channel JSON literal or file, e.g. '{\"channel\": \"gaussian\", \"eta\": 1}'")
    p.add_argument("--M", type=int, default=2, help="number of hypotheses (default 2)")
    vf = p.add_mutually_exclusive_group()
    vf.add_argument("--vf", dest="valley_fill", action="store_true", default=True, help="valley-filled bound (default)")
    vf.add_argument("--no-vf", dest="valley_fill", action="store_false", help="plain bound")
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-nodes", type=int)
    p.add_argument("--refine-tol", type=float)
    p.add_argument("--gl-order", type=int)
    p.add_argument("--y-window-sigma", type=float)
    p.add_argument("--x-window", help="lo,hi")
    p.add_argument("--extra-t-nodes", help="comma-separated t values")
    p.add_argument("--node-cap", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp from metadata")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zzbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"zzbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate one Ziv-Zakai bound")
    _add_common(p)
    p.add_argument("--dump-integrand", help="write the per-t integrand table to this CSV path")
    p.add_argument("--brief", action="store_true", help="omit per-t rows from the JSON report")

    p = sub.add_parser("sweep", help="bounds and MMSE over a list of noise levels")
    _add_common(p, eta_list=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("asymptotic", help="high-noise limit of the bound")
    _add_common(p)
    p.add_argument("--route", choices=["overlap", "finite_noise"], default="overlap")
    p.add_argument("--center", action="store_true", help="shift the prior to zero mean first")

    p = sub.add_parser("slope", help="ZZ(eta)/eta table for decreasing noise levels")
    _add_common(p, eta_list=True)

    p = sub.add_parser("mmse", help="MMSE by quadrature and Monte Carlo")
    _add_common(p)
    p.add_argument("--n", type=int, default=10**6, help="Monte Carlo sample size")

    p = sub.add_parser("verify", help="tightness falsification checks")
    _add_common(p)
    p.add_argument("--check", choices=["unimodal", "zz", "both"], default="both")
    p.add_argument("--t-list", help="comma-separated shifts for the zz check")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    quad = {
        "t_max": ns.t_max,
        "t_nodes": ns.t_nodes,
        "refine_tol": ns.refine_tol,
        "gl_order": ns.gl_order,
        "y_window_sigma": ns.y_window_sigma,
        "x_window": _numbers(ns.x_window, "--x-window") if ns.x_window else None,
        "extra_t_nodes": _numbers(ns.extra_t_nodes, "--extra-t-nodes") if ns.extra_t_nodes else None,
        "node_cap": ns.node_cap,
    }
    extras = {}
    for key in ("dump_integrand", "brief", "jobs", "route", "center", "n", "check"):
        if hasattr(ns, key):
            extras[key] = getattr(ns, key)
    if getattr(ns, "t_list", None):
        extras["t_list"] = _numbers(ns.t_list, "--t-list")
    return RunConfig(
        command=ns.command,
        prior=ns.prior,
        eta=_numbers(ns.eta, "--eta") if ns.eta else None,
        channel=ns.channel,
        M=ns.M,
        valley_fill=ns.valley_fill,
        quad={k: v for k, v in quad.items() if v is not None},
        out=ns.out,
        format=ns.format,
        seed=ns.seed,
        deterministic=ns.deterministic,
        extras=extras,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = config_from_args(ns)
    except SpecError as exc:
        print(f"zzbound: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
