"""Command line front end.

Subcommands: gen, assemble, approx, report, verify, solve.  All flags are
long-form.  A ``key = value`` config file can preload any flag; flags given on
the command line win.  Exit codes: 0 success, 2 verification failure, 3 a
method assumption is violated by the input, 4 I/O or usage trouble.

Identical configurations produce bit-identical text output: tables round to 6
significant digits, vectors and matrix entries carry 17, and nothing
nondeterministic (like wall time) lands in an artifact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline
from .assembly import assemble_load
from .errors import (
    DDFemError,
    MeshFormatError,
    MethodAssumptionError,
    SingularSystemError,
    UnsupportedConfigError,
)
from .mesh import (
    ConductivityField,
    conductivity_from_mesh,
    gen_structured_cube,
    gen_structured_square,
    load_mesh,
    save_mesh,
)
from .quadrature import parse_rule_records, standard_rule
from .solver import factor_kbar, pcg_solve

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_ASSUMPTION = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    # Usage problems belong to the I/O exit code, keeping 2 reserved for
    # verification failures.
    def error(self, message):
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _fmt6(v) -> str:
    return f"{float(v):.6g}"


def _fmt17(v) -> str:
    return f"{float(v):.17g}"


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; repeated ``quad_point`` keys accumulate."""
    values: dict = {}
    quad_points: list[list[str]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MeshFormatError(f"cannot read config file: {exc}") from None
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise MeshFormatError(f"expected 'key = value' in {raw!r}", line=ln)
        key, _, val = stripped.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if key == "quad_point":
            quad_points.append(val.split())
        else:
            values[key] = val
    if quad_points:
        values["quad_point"] = quad_points
    return values


def _add_input_options(sub):
    sub.add_argument("--config", help="key = value file preloading any flag")
    sub.add_argument("--mesh", help="mesh file to load")
    sub.add_argument("--kind", choices=["square", "cube"],
                     help="structured generator (alternative to --mesh)")
    sub.add_argument("--k", type=int, help="generator subdivision count")
    sub.add_argument("--p", type=int, choices=[1, 2], help="element order")
    sub.add_argument("--dirichlet", choices=["boundary", "none"],
                     default=None, help="generator boundary marking")
    sub.add_argument("--theta", default=None,
                     help="conductivity: a constant, 'expr:<formula in x,y,z>', "
                          "or 'mesh' for per-element values from the mesh file")
    sub.add_argument("--quad", default=None,
                     help="'standard' or a file of 'x y [z] w' lines")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker count contract; every value runs the "
                          "deterministic reference path")


def build_parser() -> _Parser:
    parser = _Parser(prog="ddfem",
                     description="Finite element stiffness matrices and their "
                                 "diagonally dominant approximations")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", parents=[], help="generate a structured mesh")
    _add_input_options(gen)
    gen.add_argument("--out", required=True, help="mesh file to write")

    assemble = subs.add_parser("assemble", help="assemble the stiffness matrix")
    _add_input_options(assemble)
    assemble.add_argument("--out", required=True, help="matrix file to write")

    approx = subs.add_parser("approx",
                             help="build the diagonally dominant approximation")
    _add_input_options(approx)
    approx.add_argument("--out", required=True, help="matrix file to write")

    report = subs.add_parser("report", help="mesh/rule quality and bound table")
    _add_input_options(report)
    report.add_argument("--format", choices=["text", "json"], default=None)
    report.add_argument("--out", default=None, help="default: stdout")

    verify = subs.add_parser("verify", help="run the invariant battery")
    _add_input_options(verify)
    verify.add_argument("--dense-limit", type=int, default=None,
                        help="largest n for the dense global checks")
    verify.add_argument("--debug-corrupt-kbar", action="store_true",
                        help="debug: damage the approximation to force failure")

    solve = subs.add_parser("solve", help="preconditioned conjugate gradient demo")
    _add_input_options(solve)
    solve.add_argument("--source", default=None,
                       help="load: a constant or 'expr:<formula>' (default 1)")
    solve.add_argument("--tol", type=float, default=None,
                       help="relative residual target (default 1e-10)")
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--out", required=True, help="solution file to write")
    return parser


def _merge_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        cfg = read_config_file(args.config)
    merged = dict(cfg)
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None and val is not False:
            merged[key] = val
    return merged


def _intval(cfg, key, default=None):
    v = cfg.get(key, default)
    if v is None:
        return None
    try:
        return int(v)
    except (TypeError, ValueError):
        raise UnsupportedConfigError(f"{key} must be an integer, got {v!r}") from None


def _floatval(cfg, key, default=None):
    v = cfg.get(key, default)
    if v is None:
        return None
    try:
        return float(v)
    except (TypeError, ValueError):
        raise UnsupportedConfigError(f"{key} must be a number, got {v!r}") from None


def _resolve_mesh(cfg):
    if cfg.get("mesh") and cfg.get("kind"):
        raise UnsupportedConfigError("give either --mesh or --kind, not both")
    if cfg.get("mesh"):
        return load_mesh(cfg["mesh"])
    kind = cfg.get("kind")
    if not kind:
        raise UnsupportedConfigError("a mesh source is required: --mesh or --kind")
    k = _intval(cfg, "k")
    if k is None:
        raise UnsupportedConfigError("--kind needs --k")
    p = _intval(cfg, "p", 1)
    dirichlet = cfg.get("dirichlet") or "boundary"
    if kind == "square":
        return gen_structured_square(k, p=p, dirichlet=dirichlet)
    return gen_structured_cube(k, p=p, dirichlet=dirichlet)


def _resolve_theta(cfg, mesh):
    raw = cfg.get("theta")
    if raw is None or raw == "mesh":
        return conductivity_from_mesh(mesh)
    if isinstance(raw, str) and raw.startswith("expr:"):
        return ConductivityField.from_expression(raw.removeprefix("expr:"))
    return ConductivityField.from_constant(float(raw))


def _resolve_rule(cfg, mesh):
    quad = cfg.get("quad")
    records = cfg.get("quad_point")
    if records:
        return parse_rule_records(records, mesh.d, name="config")
    if quad in (None, "standard"):
        return standard_rule(mesh.d, mesh.p)
    records = []
    try:
        for raw in Path(quad).read_text(encoding="utf-8").splitlines():
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                records.append(stripped.split())
    except OSError as exc:
        raise MeshFormatError(f"cannot read quadrature file: {exc}") from None
    return parse_rule_records(records, mesh.d, name=Path(quad).name)


def _resolve_source(cfg):
    raw = cfg.get("source")
    if raw is None:
        return 1.0
    if isinstance(raw, str) and raw.startswith("expr:"):
        field = ConductivityField.from_expression(raw.removeprefix("expr:"))
        return lambda x: field.fn(x)
    return float(raw)


def _threads(cfg) -> int:
    v = cfg.get("threads")
    if v is None:
        v = os.environ.get("DDFEM_THREADS", "1")
    n = int(v)
    if n < 1:
        raise UnsupportedConfigError(f"threads must be >= 1, got {n}")
    return n


def _report_dict(system, bundle) -> dict:
    qual = bundle.quality
    return {
        "m": system.mesh.n_elements,
        "n": system.stiffness.n,
        "kappa1": qual.kappa1,
        "kappa2": qual.kappa2,
        "chi1": bundle.chi.max_chi1,
        "chi2": bundle.chi.max_chi2,
        "chi3": bundle.chi.chi3,
        "sigma_qp": qual.sigma_qp,
        "tau_qp": qual.tau_qp,
        "weight_ratio": qual.M_q / qual.m_q,
    }


_REPORT_COLUMNS = ["m", "n", "kappa1", "kappa2", "chi1", "chi2", "chi3",
                   "sigma_qp", "tau_qp", "weight_ratio"]


def _report_text(data: dict) -> str:
    cells = [str(data["m"]), str(data["n"])]
    cells += [_fmt6(data[c]) for c in _REPORT_COLUMNS[2:]]
    widths = [max(len(h), len(c)) for h, c in zip(_REPORT_COLUMNS, cells)]
    head = "  ".join(h.rjust(w) for h, w in zip(_REPORT_COLUMNS, widths))
    row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return head + "\n" + row + "\n"


def _write_out(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_gen(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    save_mesh(mesh, cfg["out"])
    sys.stderr.write(
        f"wrote {mesh.n_elements} elements, {mesh.n_nodes} nodes "
        f"({mesh.n_free} free) to {cfg['out']}\n")
    return EXIT_OK


def _cmd_assemble(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    system = pipeline.build_system(mesh, _resolve_theta(cfg, mesh),
                                   _resolve_rule(cfg, mesh))
    system.stiffness.save_text(cfg["out"])
    return EXIT_OK


def _cmd_approx(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    system = pipeline.build_system(mesh, _resolve_theta(cfg, mesh),
                                   _resolve_rule(cfg, mesh))
    bundle = pipeline.approximate(system)
    bundle.dd.kbar.save_text(cfg["out"])
    return EXIT_OK


def _cmd_report(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    system = pipeline.build_system(mesh, _resolve_theta(cfg, mesh),
                                   _resolve_rule(cfg, mesh))
    bundle = pipeline.approximate(system)
    data = _report_dict(system, bundle)
    if cfg.get("format") == "json":
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    else:
        text = _report_text(data)
    _write_out(text, cfg.get("out"))
    return EXIT_OK


def _cmd_verify(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    system = pipeline.build_system(mesh, _resolve_theta(cfg, mesh),
                                   _resolve_rule(cfg, mesh))
    dense_limit = _intval(cfg, "dense_limit", 600)
    summary = pipeline.verify_system(system, dense_limit=dense_limit,
                                     corrupt_kbar=bool(cfg.get("debug_corrupt_kbar")))
    for check in summary.checks:
        status = "PASS" if check.passed else "FAIL"
        sys.stdout.write(f"{status} {check.name}: {check.detail}\n")
    if summary.passed:
        sys.stdout.write(f"verify: all {len(summary.checks)} checks passed\n")
        return EXIT_OK
    failed = sum(1 for c in summary.checks if not c.passed)
    sys.stdout.write(f"verify: {failed} of {len(summary.checks)} checks failed\n")
    return EXIT_VERIFY


def _cmd_solve(cfg) -> int:
    mesh = _resolve_mesh(cfg)
    if mesh.n_free == mesh.n_nodes:
        raise SingularSystemError(
            "no Dirichlet nodes: the reduced system is singular")
    theta = _resolve_theta(cfg, mesh)
    rule = _resolve_rule(cfg, mesh)
    system = pipeline.build_system(mesh, theta, rule)
    bundle = pipeline.approximate(system)
    rhs = assemble_load(mesh, system.ref, rule, theta, _resolve_source(cfg),
                        geometries=system.geometries)
    tol = _floatval(cfg, "tol", 1e-10)
    max_iter = _intval(cfg, "max_iter")
    handle = factor_kbar(bundle.dd.kbar)
    pre = pcg_solve(system.stiffness, rhs, preconditioner=handle, tol=tol,
                    max_iter=max_iter)
    plain = pcg_solve(system.stiffness, rhs, preconditioner=None, tol=tol,
                      max_iter=max_iter)

    lines = [f"ddfem-solution v1 n={system.stiffness.n}"]
    lines += [f"x {i + 1} {_fmt17(v)}" for i, v in enumerate(pre.x)]
    lines += [
        f"iterations preconditioned {pre.iterations}",
        f"iterations unpreconditioned {plain.iterations}",
        f"residual {_fmt17(pre.relative_residual)}",
        f"converged {1 if pre.converged else 0}",
    ]
    Path(cfg["out"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    sys.stdout.write(
        f"solve: {pre.iterations} preconditioned vs {plain.iterations} "
        f"unpreconditioned iterations, residual {_fmt6(pre.relative_residual)}\n")
    sys.stderr.write(f"wall time {pre.wall_time:.3f}s + {plain.wall_time:.3f}s\n")
    if not pre.converged:
        sys.stderr.write("solve: preconditioned iteration did not converge\n")
        return EXIT_VERIFY
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "assemble": _cmd_assemble,
    "approx": _cmd_approx,
    "report": _cmd_report,
    "verify": _cmd_verify,
    "solve": _cmd_solve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        _threads(cfg)
        return _COMMANDS[args.command](cfg)
    except MethodAssumptionError as exc:
        sys.stderr.write(f"assumption violated: {exc}\n")
        return EXIT_ASSUMPTION
    except SingularSystemError as exc:
        sys.stderr.write(f"singular system: {exc}\n")
        return EXIT_ASSUMPTION
    except (MeshFormatError, UnsupportedConfigError, OSError, ValueError) as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return EXIT_IO
    except DDFemError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
