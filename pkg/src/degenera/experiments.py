"""Command-line runner: TOML configs in, deterministic CSV and text reports out.

Usage::

    degenera <command> --config run.toml [--out DIR] [--seed N]

Commands are ``verify``, ``density``, ``inequality``, ``poincare``,
``solve`` and ``example8``. Exit status is 0 when every check passes, 2 when
a hypothesis or check fails (expected for negative-control configs) and 1
on configuration or execution errors. ``DEGENERA_THREADS`` caps the BLAS
thread pool.
"""
from __future__ import annotations

import argparse
import ast
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from . import calculus as calc
from . import fem
from .cutoff import chi_growth_fit
from .errors import HypothesisError, InvalidArgument, NonConvergenceError, SingularEvaluationError
from .geometry import Domain, build_disk_mesh, build_interval_mesh, build_square_mesh
from .weights import ShapeMap, hypothesis_check, minimal_sigma, weight_from_dict

COMMANDS = ("verify", "density", "inequality", "poincare", "solve", "example8")
THREADS_ENV = "DEGENERA_THREADS"

# allowed keys per section; "*" marks required ones
SCHEMA = {
    "common": {"command", "seed", "weight", "domain", "mesh", "tolerances"},
    "weight": {"kind*", "exponent", "dimension", "m", "zero_set", "a", "b", "c", "coefficients", "x", "values"},
    "domain": {"kind*", "a", "b", "radius"},
    "mesh": {"cells", "grading", "center", "rings", "sectors", "q"},
    "tolerances": {"identity", "slack", "solver"},
    "verify": {"f*", "derivative*", "alpha", "checks", "m", "singular_points", "scales"},
    "density": {"f*", "derivative*", "n", "m", "p", "growth_orders", "growth_n"},
    "inequality": {"kind*", "p", "d", "count", "sigma", "R", "C_Omega"},
    "poincare": {"cells", "p"},
    "solve": {"a", "c", "k", "b", "exact", "levels", "method", "problem"},
    "example8": {"d", "m", "beta", "rings", "sectors", "q", "K_radius", "growth_threshold",
                 "stability_threshold", "method"},
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# expressions


_FUNCS = {name: getattr(np, name) for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sinh", "cosh",
                                                "tanh", "arctan")}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant, ast.Add, ast.Sub,
          ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def compile_expression(text: str, dim: int = 1):
    """Compile an arithmetic expression in ``x`` (and ``y``, ``r`` in 2D) to a field.

    Only arithmetic, numeric constants, ``pi``, ``e`` and a fixed set of
    numpy functions are accepted.
    """
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    names = {"x", "y", "r"} | set(_FUNCS) | set(_CONSTS)
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"expression {text!r}: {type(node).__name__} is not allowed")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ConfigError(f"expression {text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ConfigError(f"expression {text!r}: only {sorted(_FUNCS)} may be called")
    code = compile(tree, "<config>", "eval")

    def fn(pts):
        pts = np.asarray(pts, dtype=float)
        env = dict(_FUNCS, **_CONSTS)
        env["x"] = pts[:, 0]
        env["y"] = pts[:, 1] if dim > 1 else np.zeros(pts.shape[0])
        env["r"] = np.linalg.norm(pts, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = eval(code, {"__builtins__": {}}, env)  # noqa: S307 - AST whitelisted above
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    return fn


# --------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    command: str
    data: dict
    seed: int = 0
    output_dir: Path = Path("degenera-out")
    source: str = ""

    def section(self, name: str) -> dict:
        return dict(self.data.get(name, {}))


@dataclass
class RunReport:
    config: RunConfig
    checks: list = field(default_factory=list)  # (name, passed, detail)
    tables: dict = field(default_factory=dict)  # file name -> (columns, rows)
    hypothesis_failure: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.hypothesis_failure is None and all(ok for _, ok, _ in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))


def _validate(data: dict, command: str) -> None:
    allowed = SCHEMA["common"] | {command}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown top-level key {key!r} for command {command!r}")
    for name, table in data.items():
        if name not in SCHEMA or not isinstance(table, dict):
            continue
        spec = SCHEMA[name]
        keys = {k.rstrip("*") for k in spec}
        for k in table:
            if k not in keys:
                raise ConfigError(f"[{name}] unknown field {k!r}")
        for k in spec:
            if k.endswith("*") and k[:-1] not in table:
                raise ConfigError(f"[{name}] missing required field {k[:-1]!r}")
    if command in ("verify", "density", "inequality") and command not in data:
        raise ConfigError(f"missing [{command}] table")


def load_config(path, command: str, seed: int | None = None, out=None) -> RunConfig:
    """Read and validate a TOML run configuration."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    raw = Path(path).read_bytes()
    try:
        data = tomli.loads(raw.decode("utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "command" in data and data["command"] != command:
        raise ConfigError(f"config is for command {data['command']!r}, not {command!r}")
    _validate(data, command)
    s = seed if seed is not None else data.get("seed", 0)
    if not isinstance(s, int) or s < 0:
        raise ConfigError("seed must be a non-negative integer")
    return RunConfig(command, data, s, Path(out) if out else Path("degenera-out"), str(path))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


# --------------------------------------------------------------------------
# shared builders


def _domain(cfg: RunConfig) -> Domain:
    d = cfg.section("domain")
    kind = d.get("kind", "interval")
    try:
        if kind == "interval":
            return Domain.interval(float(d.get("a", -1.0)), float(d.get("b", 1.0)))
        if kind == "disk":
            return Domain.disk(float(d.get("radius", 1.0)))
        if kind == "square":
            return Domain.square(float(d.get("a", 0.0)), float(d.get("b", 1.0)))
    except InvalidArgument as exc:
        raise ConfigError(f"[domain] {exc}") from None
    raise ConfigError(f"[domain] unknown kind {kind!r}")


def _weight(cfg: RunConfig):
    spec = cfg.section("weight") or {"kind": "one"}
    try:
        return weight_from_dict(spec)
    except (KeyError, InvalidArgument, TypeError) as exc:
        raise ConfigError(f"[weight] {exc}") from None


def _interval_mesh(cfg: RunConfig, domain: Domain, v=None, cells=None):
    m = cfg.section("mesh")
    N = int(cells or m.get("cells", 32))
    q = float(m.get("grading", 1.0))
    c = m.get("center")
    if c is None and v is not None:
        inner = [z[0] for z in v.zero_set if domain.a < z[0] < domain.b]
        c = inner[0] if inner else None
    if c is None and q != 1.0:
        c = domain.a if any(abs(z[0] - domain.a) < 1e-12 for z in (v.zero_set if v else ())) else None
    return build_interval_mesh(domain.a, domain.b, N, q=q if c is not None else 1.0, c=c)


def _mesh(cfg: RunConfig, domain: Domain, v=None, cells=None):
    m = cfg.section("mesh")
    if domain.kind == "interval":
        return _interval_mesh(cfg, domain, v, cells)
    if domain.kind == "disk":
        return build_disk_mesh(domain.radius, int(cells or m.get("rings", 16)), int(m.get("sectors", 32)),
                               float(m.get("q", 3.0)))
    return build_square_mesh(domain.a, domain.b, int(cells or m.get("cells", 16)))


def _field(text_f, text_df, dim=1, alpha=(1,)):
    f = compile_expression(text_f, dim)
    ders = {}
    if text_df is not None:
        ders[tuple(alpha)] = compile_expression(text_df, dim)
    return calc.ScalarField(f, ders, (), dim)


# --------------------------------------------------------------------------
# pipelines


def run_verify(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("verify")
    tol = float(cfg.section("tolerances").get("identity", calc.IDENTITY_TOL))
    v = _weight(cfg)
    domain = _domain(cfg)
    alpha = tuple(sec.get("alpha", [1]))
    F = _field(sec["f"], sec["derivative"], v.dim, alpha)
    mesh = _mesh(cfg, domain, v)
    singular = sec.get("singular_points", [z[0] if v.dim == 1 else z for z in v.zero_set])
    battery = calc.build_battery(mesh, tuple(sec.get("scales", (1.0, 3.0, 9.0))), seed=cfg.seed,
                                 breakpoints=tuple(singular))
    rows = []
    for check in sec.get("checks", ["weak_derivative"]):
        if check == "weak_derivative":
            rep = calc.weak_derivative_residual(F, F.d(alpha), v, alpha, battery)
        elif check == "leibniz":
            rep = calc.leibniz_residual(F, v, int(sec.get("m", calc.cb.order(alpha))), alpha, battery)
        else:
            raise ConfigError(f"[verify] unknown check {check!r}")
        row = rep.to_row(check, alpha)
        row["holds"] = rep.relative <= tol
        rows.append(row)
        report.add(f"{check} alpha={alpha}", row["holds"], f"relative residual {rep.relative:.3e} (tol {tol:g})")
    report.tables["residuals.csv"] = (("kind", "alpha", "residual", "scale", "relative", "holds"), rows)


def run_density(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("density")
    v = _weight(cfg)
    domain = _domain(cfg)
    m = int(sec.get("m", 1))
    p = float(sec.get("p", 2.0))
    if v.dim != 1:
        raise ConfigError("[density] only interval domains are supported")
    F = _field(sec["f"], sec["derivative"], 1, (1,))
    s = ShapeMap.abs(m, 1)
    mesh = _mesh(cfg, domain, v)
    ns = [int(n) for n in sec.get("n", [4, 8, 16, 32, 64])]
    norms = calc.cutoff_error_norms(F, v, s, p, ns, mesh)
    rows, prev = [], None
    for n in ns:
        rows.append({"n": n, "norm": norms[n], "ratio": norms[n] / prev if prev else math.nan})
        prev = norms[n]
    report.tables["density.csv"] = (("n", "norm", "ratio"), rows)
    vals = [norms[n] for n in ns]
    report.add("density strictly decreasing", all(b < a for a, b in zip(vals, vals[1:])))
    report.add("density final/initial <= 0.5", vals[-1] <= 0.5 * vals[0], f"ratio {vals[-1] / vals[0]:.6g}")
    grows = []
    for k in sec.get("growth_orders", [1, 2]):
        fit = chi_growth_fit(v, ShapeMap.abs(max(m, k), 1), (int(k),), sec.get("growth_n", ns), domain)
        target = s((int(k),)) if k <= m else float(k)
        ok = math.isfinite(fit.exponent) and abs(fit.exponent - target) <= 0.15
        grows.append({"order": int(k), "constant": fit.constant, "exponent": fit.exponent, "target": target,
                      "holds": ok})
        report.add(f"cutoff growth order {k}", ok, f"exponent {fit.exponent:.6g} vs {target:g}")
    report.tables["growth.csv"] = (("order", "constant", "exponent", "target", "holds"), grows)


def run_inequality(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("inequality")
    kind = sec["kind"]
    p = float(sec.get("p", 2.0))
    d = int(sec.get("d", 1))
    count = int(sec.get("count", 100))
    R = float(sec.get("R", 1.0))
    v = _weight(cfg) if "weight" in cfg.data else None
    rng = make_rng(cfg.seed)
    params = {"R": R, "tolerance": float(cfg.section("tolerances").get("slack", calc.SLACK))}
    if "C_Omega" in sec:
        params["C_Omega"] = float(sec["C_Omega"])
    # hypotheses first, before drawing any test function
    if kind in ("kebiche_73", "oned_72", "poincare_cor"):
        if v is None:
            raise ConfigError(f"[weight] required for {kind}")
        domain = _domain(cfg) if d == 1 else Domain.disk(R)
        sigma = float(sec["sigma"]) if "sigma" in sec else minimal_sigma(v, p, domain)
        params["sigma"] = sigma
        win = hypothesis_check("window_72", v, {"sigma": sigma, "p": p, "d": d})
        report.tables["hypotheses.csv"] = (("condition", "holds", "value"),
                                           [{"condition": "window_72", "holds": win.holds, "value": win.constant}])
        if not win.holds:
            report.hypothesis_failure = (f"window_72: 0 < 2 sigma p / (d - p) < 1 violated with sigma={sigma:g}, "
                                         f"p={p:g}, d={d} (value {win.constant:.6g})")
            return
        if d == 1:
            params["mesh"] = _mesh(cfg, domain, v)
    rows = []
    for i in range(count):
        if d == 1:
            f = calc.random_bump_field(rng, _domain(cfg))
        else:
            f = calc.random_radial_polynomial(rng, R)
        rep = calc.inequality_check(kind, v, f, p, d, params)
        row = rep.to_row(kind)
        row["index"] = i
        rows.append(row)
    report.tables["inequality.csv"] = (("kind", "index", "lhs", "rhs", "constant", "margin", "holds"), rows)
    worst = min((r["margin"] for r in rows), default=math.nan)
    report.add(f"{kind} margin >= 0 on {count} fields", all(r["holds"] for r in rows),
               f"constant {rows[0]['constant']:.6g}, min margin {worst:.6g}" if rows else "")


def run_poincare(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("poincare")
    v = _weight(cfg)
    domain = _domain(cfg)
    rows, prev = [], None
    for lvl, N in enumerate(sec.get("cells", [16, 32, 64, 128])):
        space = fem.FESpace(_mesh(cfg, domain, v, cells=N))
        C = fem.estimate_poincare(space, v, float(sec.get("p", 2.0)))
        rows.append({"level": lvl, "cells": int(N), "dofs": space.ndofs, "constant": C,
                     "change": C - prev if prev is not None else math.nan})
        prev = C
    report.tables["poincare.csv"] = (("level", "cells", "dofs", "constant", "change"), rows)
    cs = [r["constant"] for r in rows]
    report.add("poincare monotone under refinement", all(b >= a * (1 - 1e-6) for a, b in zip(cs, cs[1:])))


def _coefficients(cfg: RunConfig, sec: dict, v):
    if sec.get("problem") == "example":
        e8 = cfg.section("example8")
        return fem.CoefficientSet.example(int(e8.get("d", 2)), int(e8.get("m", 1)), float(e8.get("beta", 0.5)))
    d = v.dim
    k = compile_expression(sec.get("k", "1"), d)
    a = compile_expression(sec.get("a", "1"), d)
    c = compile_expression(sec.get("c", "1"), d)
    coeffs = fem.CoefficientSet.constant(v, k=k, b=sec.get("b"))
    coeffs.a_tilde = lambda x: a(x)[:, None, None] * np.eye(d)[None]
    coeffs.c_tilde = c
    return coeffs


def run_solve(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("solve")
    v = _weight(cfg)
    domain = _domain(cfg)
    coeffs = _coefficients(cfg, sec, v)
    coer = fem.coercivity_check(coeffs, domain)
    report.tables["hypotheses.csv"] = (("condition", "holds", "value"),
                                       [{"condition": f"coercivity_{coer.case}", "holds": coer.case != "none",
                                         "value": coer.gamma}])
    if coer.case == "none":
        report.hypothesis_failure = "coercivity: no sufficient case holds"
        return
    exact = compile_expression(sec["exact"], v.dim) if "exact" in sec else None
    tol = float(cfg.section("tolerances").get("solver", 1e-10))
    rows, prev = [], None
    for lvl, N in enumerate(sec.get("levels", [16, 32, 64, 128])):
        space = fem.FESpace(_mesh(cfg, domain, v, cells=N))
        rep = fem.solve(fem.assemble(coeffs, space), sec.get("method", "auto"), tol, gamma=coer.gamma)
        err = math.nan
        if exact is not None:
            u = space.values_at_quadrature(rep.solution)
            ex = exact(space.points.reshape(-1, v.dim)).reshape(u.shape)
            err = float(math.sqrt(np.sum(space.weights * (u - ex) ** 2)))
        rows.append({"level": lvl, "cells": int(N), "dofs": space.ndofs, "iterations": rep.iterations,
                     "residual": rep.residual_norm, "energy": rep.energy_norm, "bound": rep.bound,
                     "bound_ok": rep.bound_ok, "l2_error": err, "error_ratio": prev / err if prev else math.nan})
        prev = err
    report.tables["solve.csv"] = (("level", "cells", "dofs", "iterations", "residual", "energy", "bound", "bound_ok",
                                   "l2_error", "error_ratio"), rows)
    report.add("a posteriori bound", all(r["bound_ok"] for r in rows))
    if exact is not None and len(rows) >= 2:
        orders = [math.log2(r["error_ratio"]) for r in rows[1:]]
        report.add("L2 order 2.0 +- 0.3", all(abs(o - 2.0) <= 0.3 for o in orders),
                   "orders " + " ".join(f"{o:.4f}" for o in orders))


def run_example8(cfg: RunConfig, report: RunReport) -> None:
    sec = cfg.section("example8")
    coeffs = fem.CoefficientSet.example(int(sec.get("d", 2)), int(sec.get("m", 1)), float(sec.get("beta", 0.5)))
    if coeffs.dim != 2:
        raise ConfigError("[example8] the study runs on 2D disk meshes (d = 2)")
    domain = Domain.disk(1.0)
    hyp = fem.nonintegrability_check(coeffs, domain)
    coer = fem.coercivity_check(coeffs, domain)
    rows = [{"condition": k, "holds": ok, "value": math.nan} for k, ok in hyp.details["flags"].items()]
    rows.append({"condition": f"coercivity_{coer.case}", "holds": coer.case != "none", "value": coer.gamma})
    report.tables["hypotheses.csv"] = (("condition", "holds", "value"), rows)
    if not hyp.holds:
        failed = ", ".join(hyp.witness["failed"])
        report.hypothesis_failure = f"non-integrability hypotheses failed: {failed}"
        return
    if coer.case == "none":
        report.hypothesis_failure = "coercivity: no sufficient case holds"
        return
    levels = [(int(r), int(sec.get("sectors", 32)), float(sec.get("q", 3.0)))
              for r in sec.get("rings", [8, 16, 32, 64, 128])]
    table = fem.divergence_study(coeffs, levels, float(sec.get("K_radius", 0.25)),
                                 growth_threshold=float(sec.get("growth_threshold", 1.3)),
                                 stability_threshold=float(sec.get("stability_threshold", 0.05)),
                                 method=sec.get("method", "auto"))
    report.tables["study.csv"] = (fem.STUDY_COLUMNS, table.rows)
    if table.aborted:
        report.add("study completed", False, table.aborted)
        return
    if table.verdicts is None:
        report.add("study verdict", True, "fewer than 3 levels; no verdict")
        return
    vd = table.verdicts
    report.add("local mass growth", vd["mass_growth"], f"min ratio {vd['min_mass_ratio']:.6g}")
    report.add("energy stable", vd["energy_stable"], f"last change {vd['last_energy_change']:.6g}")
    report.add("a posteriori bound", vd["bound_ok"], f"max energy/bound {vd['bound_ratio_max']:.6g}")


PIPELINES = {"verify": run_verify, "density": run_density, "inequality": run_inequality,
             "poincare": run_poincare, "solve": run_solve, "example8": run_example8}


# --------------------------------------------------------------------------
# output


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (tuple, list)):
        return " ".join(format_value(e) for e in x)
    return str(x)


def render_csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


def _flatten(d, prefix=""):
    for k in sorted(d):
        val = d[k]
        if isinstance(val, dict):
            yield from _flatten(val, f"{prefix}{k}.")
        else:
            yield f"{prefix}{k}", val


def render_report(report: RunReport) -> str:
    cfg = report.config
    out = [f"degenera {__version__}", f"command: {cfg.command}", f"seed: {cfg.seed}", "config:"]
    for k, val in _flatten(cfg.data):
        out.append(f"  {k} = {format_value(val)}")
    out.append("checks:")
    for name, ok, detail in report.checks:
        out.append(f"  {'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
    if report.hypothesis_failure:
        out.append(f"hypothesis failed: {report.hypothesis_failure}")
    out.append(f"verdict: {'pass' if report.passed else 'fail'}")
    return "\n".join(out) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(report: RunReport, fmt: str = "csv") -> list:
    """Write the report's tables (``csv``) or the text report (``text``); returns written paths."""
    out = report.config.output_dir
    written = []
    if fmt == "csv":
        for name in sorted(report.tables):
            cols, rows = report.tables[name]
            write_atomic(out / name, render_csv(cols, rows))
            written.append(out / name)
    elif fmt == "text":
        write_atomic(out / "report.txt", render_report(report))
        written.append(out / "report.txt")
    else:
        raise InvalidArgument(f"unknown format {fmt!r}")
    return written


def run(config: RunConfig) -> RunReport:
    """Run the configured pipeline and write its artifacts."""
    report = RunReport(config)
    t0 = time.perf_counter()
    try:
        PIPELINES[config.command](config, report)
    except HypothesisError as exc:
        report.hypothesis_failure = f"{exc.condition}: {exc}"
    report.wall_time = time.perf_counter() - t0
    emit(report, "csv")
    emit(report, "text")
    return report


# --------------------------------------------------------------------------
# entry point


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for failed hypotheses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv=None) -> int:
    parser = _Parser(prog="degenera", description="Weighted Sobolev verification and solver runs.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: degenera-out)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)
    limiter = None
    try:
        limiter = _thread_limit()
        cfg = load_config(args.config, args.command, args.seed, args.out)
        report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, SingularEvaluationError, NonConvergenceError, HypothesisError) as exc:
        cond = getattr(exc, "condition", None)
        if isinstance(exc, HypothesisError):
            print(f"hypothesis failed ({cond}): {exc}", file=sys.stderr)
            return 2
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if limiter is not None:
            limiter.unregister()
    print(f"wall time {report.wall_time:.3f} s", file=sys.stderr)
    for name, ok, detail in report.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
    if report.hypothesis_failure:
        print(f"hypothesis failed: {report.hypothesis_failure}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
