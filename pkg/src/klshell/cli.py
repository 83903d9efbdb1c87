"""Command-line interface for solves, studies and consistency checks.

Exit codes: 0 success, 1 numeric failure (study cell failed or identity
residual above tolerance), 2 configuration error, 3 solver/eigensolver
failure.  The output directory defaults to the current directory and can be
overridden by --out or the KLS_OUT environment variable.  Options may also be
given in a JSON config file; command-line flags win over file values.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .assembly import AssemblyError
from .linsolve import EigenSolveError, NotSPDError
from .plots import convergence_svg
from .problems import (LoadDataError, export_load_data, generate_load_data,
                       get_problem, import_load_data)
from .splines import refine
from .trace import TraceCache, compute_penalties, compute_trace_constants
from .verify import (default_interior_rule, greens_identity_residual,
                     recover_multiplier, run_study, solve_problem)

_NORMS = ("l2", "h1", "energy", "triple")


class ConfigError(ValueError):
    pass


def _config_hash(ns):
    blob = json.dumps({k: v for k, v in sorted(vars(ns).items())
                       if k not in ("func", "config")}, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _out_dir(ns):
    out = ns.out or os.environ.get("KLS_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_ints(text):
    try:
        return [int(tok) for tok in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected integer list, got {text!r}") from exc


def _require(ns, *names):
    missing = [n for n in names if getattr(ns, n, None) is None]
    if missing:
        raise ConfigError("missing required option(s): "
                          + ", ".join(f"--{n.replace('_', '-')}"
                                      for n in missing))


def _validate(ns, problems, degrees=None, meshes=None):
    errors = []
    for p in problems:
        if p not in range(1, 9):
            errors.append(f"problem {p} outside 1..8")
    for d in degrees or []:
        if d < 2:
            errors.append(f"degree {d} below 2")
    if meshes is not None and not meshes:
        errors.append("empty mesh list")
    for m in meshes or []:
        if m < 1:
            errors.append(f"mesh {m} below 1")
    if getattr(ns, "gamma", None) is not None and ns.gamma <= 1.0:
        errors.append(f"gamma {ns.gamma} must exceed 1")
    if errors:
        raise ConfigError("; ".join(errors))


def cmd_solve(ns):
    _require(ns, "problem", "degree", "mesh")
    problems = _parse_ints(ns.problem)
    _validate(ns, problems, [ns.degree], [ns.mesh])
    out = _out_dir(ns)
    stamp = {"version": __version__, "config_hash": _config_hash(ns)}
    print("problem,degree,mesh," + ",".join(_NORMS))
    for pid in problems:
        load = import_load_data(ns.load_data) if ns.load_data else None
        extra = {}
        if load is not None:
            extra = {"n_load": load.n_interior, "n_edge": load.n_edge}
        res = solve_problem(pid, ns.degree, ns.mesh,
                            gammas=(ns.gamma,) * 4, variant=ns.variant,
                            load=load, precision=ns.precision,
                            workers=ns.jobs, **extra)
        errs = res["errors"]
        print(f"{pid},{ns.degree},{ns.mesh}," +
              ",".join(f"{errs[n]:.6e}" for n in _NORMS))
        mult = recover_multiplier(res["spec"], res["patch"], res["topo"],
                                  res["coeffs"], res["penalties"])
        dump = {
            "meta": {**stamp, "problem": pid, "degree": ns.degree,
                     "mesh": ns.mesh},
            "errors": errs,
            "residual_norms": res["solve"].residual_norms,
            "condition_estimate": res["solve"].condition_estimate,
            "solution": res["coeffs"].tolist(),
            "multiplier": {
                "edges": {e: {k: np.asarray(v).tolist()
                              for k, v in blk.items()}
                          for e, blk in mult["edges"].items()},
                "corners": {f"{c[0]:g},{c[1]:g}": float(v)
                            for c, v in mult["corners"].items()},
            },
        }
        path = os.path.join(out, f"solution_p{pid}_deg{ns.degree}"
                                 f"_mesh{ns.mesh}.json")
        with open(path, "w") as fh:
            json.dump(dump, fh)
    return 0


def cmd_study(ns):
    problems = _parse_ints(ns.problems)
    degrees = _parse_ints(ns.degrees)
    meshes = _parse_ints(ns.meshes)
    _validate(ns, problems, degrees, meshes)
    out = _out_dir(ns)
    sidecar = os.path.join(out, "trace_constants.json")
    if ns.recompute_traces and os.path.exists(sidecar):
        os.remove(sidecar)
    cache = TraceCache(sidecar)

    def progress(cell):
        state = "ok" if cell.errors else f"FAILED: {cell.failure}"
        print(f"[study] problem {cell.problem} p={cell.degree} "
              f"mesh {cell.mesh}: {state}", flush=True)

    report = run_study(problems, degrees, meshes,
                       variant=(ns.variant == "inconsistent"),
                       gammas=(ns.gamma,) * 4, trace_cache=cache,
                       precision=ns.precision, tail=ns.tail,
                       workers=ns.jobs, progress=progress)
    report.meta.update(version=__version__, config_hash=_config_hash(ns))
    with open(os.path.join(out, "study.json"), "w") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out, "study.csv"), "w") as fh:
        fh.write(report.to_csv())

    for pid in problems:
        for norm in ("l2", "energy"):
            series = []
            for degree in degrees:
                cells = [c for c in report.cells
                         if c.problem == pid and c.degree == degree
                         and c.errors]
                if not cells:
                    continue
                series.append((f"p={degree}",
                               [c.h_max for c in cells],
                               [c.errors[norm] for c in cells]))
            if not series:
                continue
            guides = sorted({float(d + 1 if norm == "l2" else d - 1)
                             for d in degrees})
            svg = convergence_svg(
                series, title=f"problem {pid}: {norm} error", guides=guides)
            with open(os.path.join(out, f"convergence_p{pid}_{norm}.svg"),
                      "w") as fh:
                fh.write(svg)

    failed = [c for c in report.cells if c.errors is None]
    for c in failed:
        print(f"FAILED cell problem {c.problem} p={c.degree} "
              f"mesh {c.mesh}: {c.failure}", file=sys.stderr)
    return 1 if failed else 0


def cmd_trace_constants(ns):
    _require(ns, "problem")
    problems = _parse_ints(ns.problem)
    _validate(ns, problems, [ns.degree], [ns.mesh])
    rows = {}
    for pid in problems:
        spec = get_problem(pid)
        patch = refine(spec.patch, ns.degree, ns.mesh)
        from .assembly import build_mesh
        topo = build_mesh(patch)
        nqi = default_interior_rule(ns.degree)
        row = {}
        for conv in ("five-times", "paper-literal"):
            tc = compute_trace_constants(spec, patch, topo, nqi,
                                         degree=ns.degree, convention=conv)
            pen = compute_penalties(tc, (ns.gamma,) * 4)
            row[conv] = {"lambda_max": tc.lambda_max.tolist(),
                         "c_tr": tc.c_tr.tolist(),
                         "c_pen": pen.c_pen.tolist()}
        rows[pid] = row
    json.dump({"version": __version__, "gamma": ns.gamma,
               "degree": ns.degree, "mesh": ns.mesh, "constants": rows},
              sys.stdout, indent=1)
    print()
    return 0


def cmd_verify_identity(ns):
    _require(ns, "problem")
    problems = _parse_ints(ns.problem)
    _validate(ns, problems, [ns.degree])
    worst = 0.0
    print("problem,pair,lhs,rhs,relative_residual")
    for pid in problems:
        spec = get_problem(pid)
        res = greens_identity_residual(
            spec, degree=ns.degree, variant=(ns.variant == "inconsistent"),
            seed=ns.seed)
        for k, r in enumerate(res):
            print(f"{pid},{k},{r['lhs']:.9e},{r['rhs']:.9e},"
                  f"{r['relative']:.3e}")
            worst = max(worst, r["relative"])
    print(f"# worst relative residual: {worst:.3e} (tolerance {ns.tol:g})")
    return 0 if worst <= ns.tol else 1


def cmd_gen_data(ns):
    _require(ns, "problem", "mesh")
    problems = _parse_ints(ns.problem)
    _validate(ns, problems, meshes=[ns.mesh])
    out = _out_dir(ns)
    for pid in problems:
        spec = get_problem(pid)
        data = generate_load_data(spec, ns.mesh, n_interior=ns.n_load,
                                  n_edge=ns.n_edge, precision=ns.precision)
        path = os.path.join(out, f"load_p{pid}_mesh{ns.mesh}.json")
        export_load_data(path, data)
        print(path)
    return 0


def cmd_import_data(ns):
    data = import_load_data(ns.path)
    print(json.dumps({"problem_id": data.problem_id, "mesh": data.mesh,
                      "quadrature": {"interior": data.n_interior,
                                     "edge": data.n_edge},
                      "points": int(data.body_xi.shape[0])}))
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="klshell",
        description="Nitsche-based Kirchhoff-Love shell verification suite")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with option defaults")
        p.add_argument("--out", default=None,
                       help="output directory (or env KLS_OUT)")
        p.add_argument("--gamma", type=float, default=2.0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--precision", choices=("double", "dd"),
                       default="double")

    p = sub.add_parser("solve", help="solve one study cell")
    common(p)
    p.add_argument("--problem")
    p.add_argument("--degree", type=int)
    p.add_argument("--mesh", type=int)
    p.add_argument("--variant", action="store_true",
                   help="use the inconsistent ersatz force")
    p.add_argument("--load-data", default=None,
                   help="JSON load-data file instead of internal generation")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="full convergence sweep")
    common(p)
    p.add_argument("--problems", default="1 2 3 4 5 6 7 8")
    p.add_argument("--degrees", default="2 3 4")
    p.add_argument("--meshes", default="4 8 16 32")
    p.add_argument("--variant", choices=("consistent", "inconsistent"),
                   default="consistent")
    p.add_argument("--tail", type=int, default=None,
                   help="fit rate over the last N unflagged points")
    p.add_argument("--recompute-traces", action="store_true",
                   help="discard the trace-constant sidecar cache first")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("trace-constants",
                       help="eigenvalue trace constants and penalties")
    common(p)
    p.add_argument("--problem")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--mesh", type=int, default=4)
    p.add_argument("--recompute", action="store_true",
                   help="ignore any cache (constants are always recomputed "
                        "by this command)")
    p.set_defaults(func=cmd_trace_constants)

    p = sub.add_parser("verify-identity",
                       help="generalized Green's identity residuals")
    common(p)
    p.add_argument("--problem")
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--variant", choices=("consistent", "inconsistent"),
                   default="consistent")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_identity)

    p = sub.add_parser("gen-data", help="export manufactured load data")
    common(p)
    p.add_argument("--problem")
    p.add_argument("--mesh", type=int)
    p.add_argument("--n-load", type=int, default=25)
    p.add_argument("--n-edge", type=int, default=25)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("import-data", help="validate a load-data file")
    common(p)
    p.add_argument("path")
    p.set_defaults(func=cmd_import_data)
    return ap


def main(argv=None):
    ap = _build_parser()
    given = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = ap.parse_args(given)
        if ns.config:
            with open(ns.config) as fh:
                defaults = json.load(fh)
            for key, value in defaults.items():
                attr = key.replace("-", "_")
                # explicit command-line flags win over config-file values
                if hasattr(ns, attr) and f"--{key}" not in given:
                    setattr(ns, attr, value)
        code = ns.func(ns)
    except (ConfigError, LoadDataError, FileNotFoundError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except (NotSPDError, EigenSolveError, AssemblyError) as exc:
        print(json.dumps({"error": "solver", "message": str(exc)}),
              file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
