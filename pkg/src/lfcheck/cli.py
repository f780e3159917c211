"""Batch front end: coefficient tables, verification suites, eta sweeps.

Output discipline: numerics are decimal strings whose significant-digit
count is derived from the working precision, lines end with LF, and an
identical configuration plus tool version reproduces identical bytes.
The one exemption is the verify report's runtime_ms field, which holds
measured wall time.

Exit codes: 0 all pass, 1 verification failure, 2 configuration error,
3 numerical breakdown (partial data is still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import mpmath
from mpmath import mpf

from . import __version__
from .chol_core import (CholeskyFactorization, CoefficientTable,
                        coefficients_from_moments, factorize,
                        recursion_coefficients)
from .lf_engines import (IdentityResiduals, LFVariant, VARIANT_INFO,
                         default_variant, identity_residuals,
                         route_equivalence, run_variant, seed_from_moments,
                         variants_for_family)
from .moments import compute_moments
from .numerics import NumericalBreakdown, PrecisionContext
from .structure import structure_suite
from .toda_ode import (build_eta_grid, charlier_ode_residuals,
                       meixner_hahn_eta_residuals, toda_residuals)
from .weights import Family, make_spec, pearson_residual

SUITES = ("pearson", "routes", "lf-identities", "structure", "toda", "ode")
ALGEBRAIC_TOL = "1e-30"
SHIFT_TOL = "1e-28"
FLOW_TOL = "1e-8"
SHIFT_IDS = ("eq:P_shift_theta", "eq:P_shift_sigma")
TABLE_HEADER = "n,beta,gamma,H,p1,provenance"
SWEEP_HEADER = "eta,n,beta,gamma"
SABOTAGE_INDEX = 5
DEFAULT_PREC_BITS = 512
PREC_ENV = "LFCHECK_PREC_BITS"


class ConfigError(Exception):
    """Invalid run configuration; maps to exit code 2."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on, validated up front and serialized
    verbatim into every report so outputs are reproducible from the
    report alone."""

    command: str
    family: str | None
    a: str | None
    b: str | None
    c: str | None
    eta: str | None
    eta_min: str | None
    eta_max: str | None
    eta_steps: int | None
    n: int
    prec_bits: int
    route: str
    variants: tuple
    suite: str
    out: str | None
    fmt: str
    sabotage: bool

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["format"] = d.pop("fmt")
        d["variants"] = list(self.variants)
        d["tool_version"] = __version__
        return d


def decimal_digits(bits: int) -> int:
    # ceil(bits * 0.3010) + 2, in exact integer arithmetic
    return -((bits * 301) // -1000) + 2


def format_mpf(x, digits: int) -> str:
    # nstr formats x at its own precision; wrapping x in mpf() here would
    # re-round it to the ambient 53 bits and quietly destroy the payload
    return mpmath.nstr(x, digits)


def write_output(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- argument handling --------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfcheck",
        description=("Recursion coefficients of generalized discrete "
                     "orthogonal polynomial weights: compute tables, verify "
                     "the identities they must satisfy, sweep eta."))
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_eta: bool):
        p.add_argument("--family", choices=[f.value for f in Family],
                       help="weight family (required)")
        p.add_argument("--a", metavar="X", help="family parameter a")
        p.add_argument("--b", metavar="X", help="family parameter b")
        p.add_argument("--c", metavar="X", help="family parameter c")
        if with_eta:
            p.add_argument("--eta", metavar="X", help="weight parameter eta")
        p.add_argument("--n", type=int, default=24, metavar="N",
                       help="table length: indices 0..N-1 (default 24)")
        p.add_argument("--prec", type=int, metavar="BITS",
                       help=f"working precision in bits (default {DEFAULT_PREC_BITS}; "
                            f"env {PREC_ENV} overrides the default)")
        p.add_argument("--out", metavar="PATH",
                       help="output file (default: stdout)")

    p_compute = sub.add_parser(
        "compute", help="write a coefficient table (n, beta, gamma, H, p1)")
    add_common(p_compute, with_eta=True)
    p_compute.add_argument("--route", choices=["moments", "lf", "both"],
                           default="moments",
                           help="moment factorization, recurrence stepping, "
                                "or both (both needs --out; writes one file "
                                "per route)")
    p_compute.add_argument("--variant", metavar="ID[,ID...]",
                           help="recurrence stepper for --route lf "
                                "(default: the family's main stepper)")
    p_compute.add_argument("--format", choices=["csv", "json"], default="csv")

    p_verify = sub.add_parser(
        "verify", help="run identity suites and write a JSON residual report")
    add_common(p_verify, with_eta=True)
    p_verify.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p_verify.add_argument("--variant", metavar="ID[,ID...]",
                          help="steppers checked by the routes suite "
                               "(default: all steppers of the family)")
    p_verify.add_argument("--format", choices=["json"], default="json",
                          help="reports are JSON")
    p_verify.add_argument("--sabotage", action="store_true",
                          help="test-only: corrupt gamma_5 of the first "
                               "stepper table by a factor (1 + 2^-20); the "
                               "routes suite must flag exactly that check")

    p_sweep = sub.add_parser(
        "sweep", help="tabulate beta_n(eta), gamma_n(eta) over an eta range")
    add_common(p_sweep, with_eta=False)
    p_sweep.add_argument("--eta-min", metavar="X", help="first eta node")
    p_sweep.add_argument("--eta-max", metavar="X", help="last eta node")
    p_sweep.add_argument("--eta-steps", type=int, metavar="K",
                         help="node count, endpoints included (0: header only)")
    p_sweep.add_argument("--route", choices=["moments", "lf"],
                         default="moments")
    p_sweep.add_argument("--format", choices=["csv"], default="csv",
                         help="sweeps are plot-ready CSV")
    return parser


def resolve_precision(arg_prec: int | None) -> int:
    if arg_prec is None:
        raw = os.environ.get(PREC_ENV)
        if raw is None:
            return DEFAULT_PREC_BITS
        try:
            arg_prec = int(raw)
        except ValueError:
            raise ConfigError(f"{PREC_ENV} must be an integer, got {raw!r}")
    if arg_prec < 128:
        raise ConfigError("precision below 128 bits is not supported")
    return arg_prec


def parse_variants(raw: str | None, family: str | None) -> tuple:
    if raw is None:
        return ()
    out = []
    for token in raw.split(","):
        token = token.strip()
        try:
            v = LFVariant(token)
        except ValueError:
            known = ", ".join(x.value for x in LFVariant)
            raise ConfigError(f"unknown variant {token!r}; known: {known}")
        if family is not None and VARIANT_INFO[v].family.value != family:
            raise ConfigError(f"variant {v.value} does not apply to {family}")
        out.append(v)
    return tuple(out)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.family is None:
        raise ConfigError("--family is required")
    if args.n < 0:
        raise ConfigError("--n must be nonnegative")
    cfg = RunConfig(
        command=args.command,
        family=args.family,
        a=args.a, b=args.b, c=args.c,
        eta=getattr(args, "eta", None),
        eta_min=getattr(args, "eta_min", None),
        eta_max=getattr(args, "eta_max", None),
        eta_steps=getattr(args, "eta_steps", None),
        n=args.n,
        prec_bits=resolve_precision(args.prec),
        route=getattr(args, "route", "moments"),
        variants=parse_variants(getattr(args, "variant", None), args.family),
        suite=getattr(args, "suite", "all"),
        out=args.out,
        fmt=args.format,
        sabotage=getattr(args, "sabotage", False),
    )
    if cfg.command == "sweep":
        if cfg.eta_min is None or cfg.eta_max is None or cfg.eta_steps is None:
            raise ConfigError("sweep requires --eta-min, --eta-max, --eta-steps")
        if cfg.eta_steps < 0:
            raise ConfigError("--eta-steps must be nonnegative")
    else:
        if cfg.eta is None:
            raise ConfigError("--eta is required")
    if cfg.command == "compute" and len(cfg.variants) > 1:
        raise ConfigError("compute takes at most one --variant")
    if cfg.sabotage:
        if cfg.suite not in ("routes", "all"):
            raise ConfigError("--sabotage needs the routes suite")
        if cfg.n <= SABOTAGE_INDEX:
            raise ConfigError(f"--sabotage corrupts index {SABOTAGE_INDEX}; "
                              f"needs --n > {SABOTAGE_INDEX}")
    return cfg


def build_weight_spec(cfg: RunConfig, ctx: PrecisionContext, eta=None):
    try:
        return make_spec(Family(cfg.family), ctx, a=cfg.a, b=cfg.b, c=cfg.c,
                         eta=cfg.eta if eta is None else eta)
    except ValueError as exc:
        raise ConfigError(str(exc))


# --- table production ---------------------------------------------------

def truncate_table(table: CoefficientTable, n_len: int) -> CoefficientTable:
    if len(table) <= n_len:
        return table
    return CoefficientTable(table.beta[:n_len], table.gamma[:n_len],
                            table.H[:n_len], table.p1[:n_len],
                            table.provenance)


def moment_route_table(spec, n_len: int, ctx) -> tuple:
    moments = compute_moments(spec, 2 * (n_len + 1), ctx)
    return coefficients_from_moments(spec, moments, n_len, ctx), moments


def lf_route_table(spec, variant: LFVariant, n_len: int, ctx) -> tuple:
    # seeds come from a 3x3 factorization; rho_0..rho_4 suffice
    moments = compute_moments(spec, 4, ctx)
    seeds = seed_from_moments(spec, variant, moments, ctx)
    table = run_variant(spec, variant, max(n_len, 2), ctx, seeds)
    return truncate_table(table, n_len), moments


def table_rows(table: CoefficientTable, digits: int) -> list:
    rows = []
    for n in range(len(table)):
        rows.append({
            "n": n,
            "beta": format_mpf(table.beta[n], digits),
            "gamma": format_mpf(table.gamma[n], digits),
            "H": format_mpf(table.H[n], digits),
            "p1": format_mpf(table.p1[n], digits),
            "provenance": table.provenance,
        })
    return rows


def table_text(rows: list, fmt: str, meta: dict) -> str:
    if fmt == "csv":
        lines = [TABLE_HEADER]
        for r in rows:
            lines.append(",".join([str(r["n"]), r["beta"], r["gamma"],
                                   r["H"], r["p1"], r["provenance"]]))
        return "\n".join(lines) + "\n"
    return json.dumps({"config": meta, "rows": rows},
                      sort_keys=True, indent=1) + "\n"


def route_out_path(out: str, route: str) -> str:
    root, ext = os.path.splitext(out)
    return f"{root}.{route}{ext}"


def cmd_compute(cfg: RunConfig) -> int:
    ctx = PrecisionContext(cfg.prec_bits)
    spec = build_weight_spec(cfg, ctx)
    digits = decimal_digits(cfg.prec_bits)
    routes = ("moments", "lf") if cfg.route == "both" else (cfg.route,)
    if len(routes) > 1 and cfg.out is None:
        raise ConfigError("--route both writes two files; --out is required")

    code = 0
    for route in routes:
        path = route_out_path(cfg.out, route) if len(routes) > 1 else cfg.out
        meta = cfg.as_dict()
        rows, breakdown = [], None
        if cfg.n > 0:
            try:
                if route == "moments":
                    table, moments = moment_route_table(spec, cfg.n, ctx)
                else:
                    variant = cfg.variants[0] if cfg.variants \
                        else default_variant(spec.family)
                    table, moments = lf_route_table(spec, variant, cfg.n, ctx)
                meta["truncation_indices"] = {route: moments.truncation_index}
            except NumericalBreakdown as exc:
                breakdown = exc
                if isinstance(exc.partial, CoefficientTable):
                    table = exc.partial
                elif isinstance(exc.partial, CholeskyFactorization):
                    table = recursion_coefficients(exc.partial, ctx)
                else:
                    table = None
                meta["breakdown_index"] = exc.index
            if table is not None:
                rows = table_rows(truncate_table(table, cfg.n), digits)
        write_output(path, table_text(rows, cfg.fmt, meta))
        if breakdown is not None:
            print(f"lfcheck: breakdown at index {breakdown.index}: "
                  f"{breakdown}", file=sys.stderr)
            code = 3
    return code


# --- verification -------------------------------------------------------

def tolerance_for(suite: str, identity: str) -> str:
    if suite in ("toda", "ode"):
        return FLOW_TOL
    if suite == "structure" and identity in SHIFT_IDS:
        return SHIFT_TOL
    return ALGEBRAIC_TOL


class _VerifyState:
    """Shares the expensive intermediates across suites of one run."""

    def __init__(self, spec, cfg, ctx):
        self.spec = spec
        self.cfg = cfg
        self.ctx = ctx
        self.truncation = {}
        self._moments = None
        self._factorization = None
        self._table = None
        self._grid = None

    def moments(self):
        if self._moments is None:
            self._moments = compute_moments(self.spec, 2 * (self.cfg.n + 1),
                                            self.ctx)
            self.truncation["moments"] = self._moments.truncation_index
        return self._moments

    def factorization(self):
        if self._factorization is None:
            self._factorization = factorize(self.moments(), self.cfg.n + 1,
                                            self.ctx)
        return self._factorization

    def table(self):
        if self._table is None:
            self._table = recursion_coefficients(self.factorization(),
                                                 self.ctx)
        return self._table

    def grid(self):
        if self._grid is None:
            self._grid = build_eta_grid(self.spec, max(self.cfg.n, 4),
                                        self.ctx)
            self.truncation["flow_grid"] = self._grid.truncation_index
        return self._grid


def run_suite(suite: str, state: _VerifyState) -> list:
    spec, cfg, ctx = state.spec, state.cfg, state.ctx
    if suite == "pearson":
        k_max = state.moments().truncation_index
        worst = pearson_residual(spec, k_max, ctx)
        return [IdentityResiduals("eq:Pearson", ((0, worst),),
                                  note=f"max over k <= {k_max}")]
    if suite == "routes":
        reference = state.table()
        variants = cfg.variants or (default_variant(spec.family),) + tuple(
            v for v in variants_for_family(spec.family)
            if v != default_variant(spec.family))
        reports = []
        for i, variant in enumerate(variants):
            try:
                candidate, _ = lf_route_table(spec, variant, cfg.n, ctx)
            except ValueError as exc:
                # e.g. the auxiliary-system stepper is undefined at a = 1
                reports.append(IdentityResiduals(
                    f"route_equivalence_{variant.value}", (),
                    note=f"skipped: {exc}"))
                continue
            if cfg.sabotage and i == 0:
                with ctx.working():
                    g = list(candidate.gamma)
                    g[SABOTAGE_INDEX] *= 1 + mpf(2) ** -20
                candidate = dataclasses.replace(candidate, gamma=tuple(g))
            reports.append(route_equivalence(
                reference, candidate, ctx,
                f"route_equivalence_{variant.value}"))
        return reports
    if suite == "lf-identities":
        return identity_residuals(state.table(), spec, ctx)
    if suite == "structure":
        return structure_suite(spec, state.factorization(), state.table(), ctx)
    if suite == "toda":
        return toda_residuals(state.grid(), ctx)
    if suite == "ode":
        if spec.family is Family.CHARLIER:
            return charlier_ode_residuals(state.grid(), ctx)
        return meixner_hahn_eta_residuals(state.grid(), ctx)
    raise ConfigError(f"unknown suite {suite!r}")


def cmd_verify(cfg: RunConfig) -> int:
    ctx = PrecisionContext(cfg.prec_bits)
    spec = build_weight_spec(cfg, ctx)
    digits = decimal_digits(cfg.prec_bits)
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)

    state = _VerifyState(spec, cfg, ctx)
    entries = []
    breakdown = None
    for suite in suites:
        try:
            t0 = time.monotonic()
            reports = run_suite(suite, state)
            runtime_ms = int((time.monotonic() - t0) * 1000)
        except NumericalBreakdown as exc:
            breakdown = exc
            break
        for r in reports:
            entries.append((suite, r, runtime_ms))

    meta = cfg.as_dict()
    meta["truncation_indices"] = dict(state.truncation)
    params = {"a": cfg.a, "b": cfg.b, "c": cfg.c, "eta": cfg.eta}
    report = []
    failed = False
    with ctx.working():
        for suite, r, runtime_ms in entries:
            tol = tolerance_for(suite, r.identity)
            verdict = r.verdict(mpf(tol))
            failed = failed or verdict == "fail"
            report.append({
                "identity": r.identity,
                "family": cfg.family,
                "params": params,
                "max_residual": format_mpf(r.max_residual, digits),
                "tolerance": tol,
                "verdict": verdict,
                "per_n": [{"n": n, "residual": format_mpf(v, digits)}
                          for n, v in r.residuals],
                "runtime_ms": runtime_ms,
                "note": r.note,
                "gating": r.gating,
                "config": meta,
            })
    if breakdown is not None:
        report.append({
            "identity": "numerical_breakdown",
            "family": cfg.family,
            "params": params,
            "max_residual": None,
            "tolerance": None,
            "verdict": "breakdown",
            "per_n": [],
            "runtime_ms": 0,
            "note": f"index {breakdown.index}: {breakdown}",
            "gating": True,
            "config": meta,
        })
    write_output(cfg.out, json.dumps(report, sort_keys=True, indent=1) + "\n")
    if breakdown is not None:
        print(f"lfcheck: breakdown at index {breakdown.index}: {breakdown}",
              file=sys.stderr)
        return 3
    return 1 if failed else 0


# --- sweeps --------------------------------------------------------------

def cmd_sweep(cfg: RunConfig) -> int:
    ctx = PrecisionContext(cfg.prec_bits)
    digits = decimal_digits(cfg.prec_bits)
    with ctx.working():
        lo = ctx.to_mpf(cfg.eta_min)
        hi = ctx.to_mpf(cfg.eta_max)
        steps = cfg.eta_steps
        nodes = [lo + (hi - lo) * i / (steps - 1) for i in range(steps)] \
            if steps > 1 else [lo] * steps

    lines = [SWEEP_HEADER]
    for eta in nodes:
        try:
            spec = make_spec(Family(cfg.family), ctx,
                             a=cfg.a, b=cfg.b, c=cfg.c, eta=eta)
            if cfg.n == 0:
                continue
            if cfg.route == "moments":
                table, _ = moment_route_table(spec, cfg.n, ctx)
            else:
                table, _ = lf_route_table(spec, default_variant(spec.family),
                                          cfg.n, ctx)
        except (ValueError, NumericalBreakdown) as exc:
            # recorded, not fatal: the sweep continues past bad nodes
            print(f"lfcheck: sweep node eta={format_mpf(eta, 8)} failed: "
                  f"{exc}", file=sys.stderr)
            continue
        eta_str = format_mpf(eta, digits)
        for n in range(len(table)):
            lines.append(",".join([eta_str, str(n),
                                   format_mpf(table.beta[n], digits),
                                   format_mpf(table.gamma[n], digits)]))
    write_output(cfg.out, "\n".join(lines) + "\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.command == "compute":
            return cmd_compute(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"lfcheck: error: {exc}", file=sys.stderr)
        return 2
    except NumericalBreakdown as exc:
        print(f"lfcheck: breakdown at index {exc.index}: {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
