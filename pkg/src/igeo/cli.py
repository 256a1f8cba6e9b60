"""Command-line front end.

Subcommands: ``gen`` (shape generators -> nOFF), ``estimate`` (surface-area
estimators), ``rvolume`` (projected / mean r-volumes), ``recursion`` (the
mean-volume recursion check), ``constants`` (closed-form measure tables),
``convergence`` (error-vs-N sweeps as CSV).

Reports are JSON with sorted keys; apart from the wall_time_s field a run is
byte-reproducible from its command line (seed included, worker count
irrelevant).  Exit codes: 0 ok, 2 bad usage/parameters, 3 I/O failure,
4 mesh validation failure, 5 insufficient Monte Carlo budget.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import estimators as est
from .errors import (
    IgeoError,
    InsufficientBudget,
    InvalidFlag,
    MeshFormatError,
    UnsupportedDimension,
)
from .measures import (
    ball_recursion_identity,
    ball_volume_omega,
    grassmannian_volume,
    sphere_area_O,
)
from .mesh import exact_surface_area, normalized, validate_mesh
from .meshio import read_noff, write_noff
from .rng import RandomStream
from .samplers import halton_sphere
from .shapes import make_box, make_reuleaux, make_sphere, make_star, make_torus

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BAD_MESH = 4
EXIT_BUDGET = 5


def _mode_arg(s):
    return {"components": est.MODE_COMPONENTS, "body-shadow": est.MODE_BODY_SHADOW}[s]


def _float_list(text):
    return tuple(float(x) for x in text.split(","))


def _mesh_hash(path):
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _load_mesh(path):
    mesh = read_noff(path)
    report = validate_mesh(mesh)
    return mesh, report


def _estimate_dict(e):
    return {
        "value": e.value,
        "std_error": e.std_error,
        "samples": e.samples,
        "discarded": e.discarded,
        "seed": e.seed,
    }


def _emit(report, out_path):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_echo(args, skip=("func",)):
    cfg = {}
    for key, val in sorted(vars(args).items()):
        if key in skip or val is None:
            continue
        cfg[key] = list(val) if isinstance(val, tuple) else val
    return cfg


# -- gen --------------------------------------------------------------------------


def cmd_gen(args):
    n = args.n
    if args.shape == "sphere":
        mesh = make_sphere(n, args.refine, args.radius)
    elif args.shape == "box":
        half = args.half
        if half is None or len(half) != n:
            raise ValueError(f"--half must give {n} comma-separated values")
        mesh = make_box(n, half)
    elif args.shape == "star":
        mesh = make_star(n, args.spikes, args.r_in, args.r_out, args.refine)
    elif args.shape == "reuleaux":
        mesh = make_reuleaux(args.width, args.refine)
    else:
        mesh = make_torus(args.ring_radius, args.tube_radius, args.refine)
    report = validate_mesh(mesh)
    write_noff(mesh, args.output, comment=f"igeo gen {args.shape}")
    print(f"{args.output}: {mesh.n_vertices} vertices, {mesh.n_facets} facets")
    print(report.summary())
    return EXIT_OK


# -- estimate ---------------------------------------------------------------------


def cmd_estimate(args):
    mesh, report = _load_mesh(args.mesh)
    base = {
        "command": f"estimate {args.estimator}",
        "params": _config_echo(args),
        "mesh_hash": _mesh_hash(args.mesh),
    }
    if not report.ok:
        base["validation"] = report.summary()
        _emit(base, args.output)
        return EXIT_BAD_MESH
    rs = RandomStream(args.seed)
    t0 = time.perf_counter()
    name = args.estimator
    if name == "exact":
        results = {"value": exact_surface_area(mesh)}
    elif name == "cauchy":
        results = _estimate_dict(
            est.cauchy_area(mesh, args.samples, rs, workers=args.workers)
        )
    elif name == "crofton":
        results = _estimate_dict(
            est.crofton_area(mesh, args.samples, rs, workers=args.workers)
        )
    elif name == "tube":
        if args.epsilon is None:
            raise ValueError("tube estimator needs --epsilon")
        results = _estimate_dict(
            est.tube_area(mesh, args.epsilon, args.samples, rs, workers=args.workers)
        )
    elif name == "project":
        if args.direction is None:
            raise ValueError("project needs --direction")
        d = normalized(np.array(args.direction))
        results = {"value": est.projected_area_exact(mesh, d)}
    else:  # project-raycast
        if args.direction is None:
            raise ValueError("project-raycast needs --direction")
        d = normalized(np.array(args.direction))
        results = _estimate_dict(
            est.projected_area_raycast(mesh, d, args.samples, rs, workers=args.workers)
        )
    base["results"] = results
    base["wall_time_s"] = time.perf_counter() - t0
    _emit(base, args.output)
    return EXIT_OK


# -- rvolume ----------------------------------------------------------------------


def cmd_rvolume(args):
    mesh, report = _load_mesh(args.mesh)
    base = {
        "command": "rvolume",
        "params": _config_echo(args),
        "mesh_hash": _mesh_hash(args.mesh),
    }
    if not report.ok:
        base["validation"] = report.summary()
        _emit(base, args.output)
        return EXIT_BAD_MESH
    if not 1 <= args.r <= mesh.dim - 1:
        raise ValueError(f"--r must be in [1, {mesh.dim - 1}]")
    modes = (
        [est.MODE_COMPONENTS, est.MODE_BODY_SHADOW]
        if args.mode == "both"
        else [_mode_arg(args.mode)]
    )
    t0 = time.perf_counter()
    results = {}
    for mode in modes:
        i_est, e_est = est.mean_rvolume(
            mesh, args.r, mode, args.outer, args.inner,
            RandomStream(args.seed), workers=args.workers,
        )
        results[mode] = {"I": _estimate_dict(i_est), "E": _estimate_dict(e_est)}
    base["results"] = results
    base["grassmannian_mass"] = grassmannian_volume(mesh.dim, mesh.dim - args.r)
    base["wall_time_s"] = time.perf_counter() - t0
    _emit(base, args.output)
    return EXIT_OK


# -- recursion --------------------------------------------------------------------


def cmd_recursion(args):
    mesh, report = _load_mesh(args.mesh)
    base = {
        "command": "recursion",
        "params": _config_echo(args),
        "mesh_hash": _mesh_hash(args.mesh),
    }
    if not report.ok:
        base["validation"] = report.summary()
        _emit(base, args.output)
        return EXIT_BAD_MESH
    t0 = time.perf_counter()
    check = est.recursion_check(
        mesh, args.r, _mode_arg(args.mode), args.outer, args.inner,
        RandomStream(args.seed), workers=args.workers,
    )
    base["results"] = {
        "lhs": _estimate_dict(check.lhs),
        "rhs": _estimate_dict(check.rhs),
        "rel_gap": check.rel_gap,
        "combined_rel_se": check.combined_rel_se,
        "passed": check.passed,
    }
    base["wall_time_s"] = time.perf_counter() - t0
    _emit(base, args.output)
    return EXIT_OK if check.passed else 1


# -- constants --------------------------------------------------------------------


def cmd_constants(args):
    n = args.n
    hi = max(n, 9)
    report = {
        "command": "constants",
        "params": _config_echo(args),
        "sphere_area_O": {str(r): sphere_area_O(r) for r in range(hi + 1)},
        "ball_volume_omega": {str(r): ball_volume_omega(r) for r in range(hi + 1)},
        "grassmannian_volume": {
            f"{n},{r}": grassmannian_volume(n, r) for r in range(1, n)
        },
        "line_measure_unit_ball": sphere_area_O(n - 1) * ball_volume_omega(n - 1),
    }
    if args.check_recursion:
        worst = 0.0
        for m in range(2, max(n, 2) + 1):
            for r in range(1, m):
                lhs, rhs = ball_recursion_identity(m, r)
                worst = max(worst, abs(lhs - rhs) / rhs)
        report["recursion_identity_max_rel_error"] = worst
        report["recursion_identity_ok"] = worst < 1e-10
    _emit(report, args.output)
    if args.check_recursion and not report["recursion_identity_ok"]:
        return 1
    return EXIT_OK


# -- convergence ------------------------------------------------------------------


def cmd_convergence(args):
    mesh, report = _load_mesh(args.mesh)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_BAD_MESH
    exact = exact_surface_area(mesh)
    ladder = [int(x) for x in args.ladder.split(",")]
    rows = ["N,value,std_error,abs_error_vs_exact"]
    for n_samples in ladder:
        values = []
        ses = []
        for rep in range(args.repeats):
            rs = RandomStream(args.seed, rep)
            if args.estimator == "cauchy":
                if args.halton:
                    dirs = halton_sphere(mesh.dim, n_samples, start_index=0)
                    pa = est.projected_areas_exact(mesh, dirs)
                    factor = sphere_area_O(mesh.dim - 1) / ball_volume_omega(mesh.dim - 1)
                    vals = factor * pa
                    e = est.estimate_from_values(vals, args.seed)
                else:
                    e = est.cauchy_area(mesh, n_samples, rs, workers=args.workers)
            else:
                e = est.crofton_area(mesh, n_samples, rs, workers=args.workers)
            values.append(e.value)
            ses.append(e.std_error)
            if args.halton:
                break
        values = np.array(values)
        rms_err = float(np.sqrt(np.mean((values - exact) ** 2)))
        rows.append(
            f"{n_samples},{float(values.mean())!r},{float(np.mean(ses))!r},{rms_err!r}"
        )
    text = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="igeo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test hypersurface as nOFF")
    g.add_argument("shape", choices=["sphere", "box", "star", "reuleaux", "torus"])
    g.add_argument("--n", type=int, default=3, help="ambient dimension")
    g.add_argument("--refine", type=int, default=0)
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--half", type=_float_list, default=None, help="box half extents a,b,...")
    g.add_argument("--spikes", type=int, default=5)
    g.add_argument("--r-in", dest="r_in", type=float, default=0.5)
    g.add_argument("--r-out", dest="r_out", type=float, default=1.0)
    g.add_argument("--width", type=float, default=1.0)
    g.add_argument("--R", dest="ring_radius", type=float, default=2.0)
    g.add_argument("--r-minor", dest="tube_radius", type=float, default=0.5)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("estimate", help="run a surface-area / projection estimator")
    e.add_argument(
        "estimator",
        choices=["exact", "cauchy", "crofton", "tube", "project", "project-raycast"],
    )
    e.add_argument("mesh")
    e.add_argument("--samples", type=int, default=10000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--epsilon", type=float, default=None)
    e.add_argument("--direction", type=_float_list, default=None)
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("rvolume", help="projected / mean r-volumes")
    r.add_argument("mesh")
    r.add_argument("--r", type=int, required=True)
    r.add_argument("--mode", choices=["components", "body-shadow", "both"], default="body-shadow")
    r.add_argument("--outer", type=int, default=256, help="Grassmannian flats")
    r.add_argument("--inner", type=int, default=4096, help="points per flat")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("-o", "--output", default=None)
    r.set_defaults(func=cmd_rvolume)

    c = sub.add_parser("recursion", help="check the mean-volume recursion")
    c.add_argument("mesh")
    c.add_argument("--r", type=int, default=1)
    c.add_argument("--mode", choices=["components", "body-shadow"], default="body-shadow")
    c.add_argument("--outer", type=int, default=256)
    c.add_argument("--inner", type=int, default=4096)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("-o", "--output", default=None)
    c.set_defaults(func=cmd_recursion)

    k = sub.add_parser("constants", help="closed-form measure tables as JSON")
    k.add_argument("--n", type=int, default=3)
    k.add_argument("--check-recursion", action="store_true")
    k.add_argument("-o", "--output", default=None)
    k.set_defaults(func=cmd_constants)

    v = sub.add_parser("convergence", help="error-vs-N sweep as CSV")
    v.add_argument("mesh")
    v.add_argument("--estimator", choices=["cauchy", "crofton"], default="cauchy")
    v.add_argument("--ladder", default="100,1000,10000,100000,1000000")
    v.add_argument("--repeats", type=int, default=8)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--halton", action="store_true")
    v.add_argument("-o", "--output", default=None)
    v.set_defaults(func=cmd_convergence)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MeshFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InsufficientBudget as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError, UnsupportedDimension, InvalidFlag) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IgeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
