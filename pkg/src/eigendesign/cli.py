"""Command-line front end.

Grammar: ``eigendesign <command> [--flag value]...`` with commands
limit, identities, solve, optimize and sweep.  Every run writes
``results.csv`` (17-significant-digit floats, schema fixed per command) and
``meta.txt`` (the fully resolved configuration plus versions) into the
output directory; report figures are rendered alongside unless
``--no-figures`` is given, and ``--plot-script`` additionally emits a
gnuplot script referencing only the emitted CSV files.

Exit status: 0 on success, 1 on usage error, 2 on solver failure.  The
environment variable ``EIGENDESIGN_THREADS`` caps the worker count used for
independent seeds and sweep entries.
"""

from __future__ import annotations

import argparse
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, asymptotics, figures, meshing
from .eigensolver import Design, principal_lambda
from .errors import EigendesignError
from .meshing import Disk, Ellipse, Interval, Rectangle
from .optimizer import (
    BoundaryCaps,
    Centered,
    RandomCaps,
    optimize,
    seed_designs,
)
from .radial import (
    LimitConfig,
    check_identities,
    limit_constants,
    solve_limit,
    tail_amplitudes,
)

_SCHEMAS = {
    "limit": ("dim,beta,mass,mu,rbar,wall_value,gamma,gamma1,big_gamma,"
              "grad_half,mass_half,res_moment_balance,res_pohozaev,"
              "res_c1_matching,tail_amp_w,tail_amp_dw"),
    "solve": ("beta,delta,h,lambda,rayleigh,rho_residual,iterations,"
              "n_vertices,n_elements,maximizer_x,maximizer_y,dist_boundary"),
    "optimize": ("seed_id,lambda,iterations,converged,final_sym_diff,delta,h,"
                 "n_elements,maximizer_x,maximizer_y,dist_boundary,"
                 "design_intervals"),
    "sweep": ("delta,od_value,rescaled,predicted_bound,maximizer_x,"
              "maximizer_y,dist_boundary,annulus_ok_0.25,annulus_ok_0.5,"
              "boundary_contact,min_over_d,connected_components,seed_id,h,"
              "n_elements,iterations"),
}


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: Path, command: str, rows) -> None:
    lines = [_SCHEMAS[command]]
    ncol = len(_SCHEMAS[command].split(","))
    for row in rows:
        if len(row) != ncol:
            raise AssertionError(f"row width {len(row)} != schema width {ncol}")
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_meta(path: Path, args: argparse.Namespace, extra: dict) -> None:
    import scipy

    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    lines = [f"command = {args.command}"]
    for key, val in resolved.items():
        if key != "command":
            lines.append(f"{key} = {val}")
    lines.append(f"eigendesign_version = {__version__}")
    lines.append(f"python = {platform.python_version()}")
    lines.append(f"numpy = {np.__version__}")
    lines.append(f"scipy = {scipy.__version__}")
    for key, val in extra.items():
        lines.append(f"{key} = {val}")
    path.write_text("\n".join(lines) + "\n")


def _workers(n_tasks: int) -> int:
    env = os.environ.get("EIGENDESIGN_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _shape_from_args(args) -> meshing.Shape:
    kind = args.shape
    if kind == "interval":
        return Interval(args.len)
    if kind == "rectangle":
        return Rectangle(args.a, args.b)
    if kind == "disk":
        return Disk(args.radius)
    if kind == "ellipse":
        return Ellipse(args.a, args.b)
    raise ValueError(f"unknown shape {kind!r}")


def _mesh_from_args(args, h: float):
    if getattr(args, "mesh_file", None):
        text = Path(args.mesh_file).read_text()
        return meshing.import_mesh(text), None
    return meshing.generate(_shape_from_args(args), h)


def _max_mean_curvature(shape: meshing.Shape) -> float:
    if isinstance(shape, Disk):
        return 1.0 / shape.radius
    if isinstance(shape, Ellipse):
        a, b = shape.semi_x, shape.semi_y
        return max(a / b ** 2, b / a ** 2)
    return 0.0  # interval; rectangle edges (corners handled separately)


def _design_intervals(mesh, design) -> str:
    """1D favorable set as 'a:b' spans; empty for 2D."""
    if mesh.dim != 1:
        return ""
    theta = design.theta()
    spans = []
    open_left = None
    order = np.argsort(mesh.centroids()[:, 0])
    for e in order:
        lo = mesh.vertices[mesh.elements[e], 0].min()
        hi = mesh.vertices[mesh.elements[e], 0].max()
        if theta[e] > 1e-9:
            if open_left is None:
                open_left = lo
            right = hi
        elif open_left is not None:
            spans.append((open_left, right))
            open_left = None
    if open_left is not None:
        spans.append((open_left, right))
    return ";".join(f"{a:.12g}:{b:.12g}" for a, b in spans)


def _field_csv(path: Path, mesh, u) -> None:
    cols = ["x", "y"][: mesh.dim] + ["u"]
    lines = [",".join(cols)]
    for xy, val in zip(mesh.vertices, u):
        lines.append(",".join(_fmt(v) for v in (*xy, val)))
    path.write_text("\n".join(lines) + "\n")


def _design_csv(path: Path, design) -> None:
    lines = ["element,weight"]
    for e, w in enumerate(design.element_weight):
        lines.append(f"{e},{_fmt(w)}")
    path.write_text("\n".join(lines) + "\n")


_GP_SWEEP = """\
# gnuplot script for a sweep run; expects results.csv in this directory
set datafile separator ','
set terminal pngcairo size 800,600
set output 'plot_od.png'
set logscale xy
set xlabel 'delta'
plot 'results.csv' using 1:2 skip 1 with linespoints title 'od(delta)'
set output 'plot_rescaled.png'
unset logscale y
set xlabel 'delta'
plot 'results.csv' using 1:3 skip 1 with linespoints title 'rescaled', \\
     'results.csv' using 1:4 skip 1 with linespoints title 'predicted bound (rescaled x delta^{2/N})'
"""

_GP_FIELD = """\
# gnuplot script; expects field.csv in this directory
set datafile separator ','
set terminal pngcairo size 800,600
set output 'plot_field.png'
plot 'field.csv' using 1:{ucol} skip 1 with points pointtype 7 pointsize 0.3 title 'u'
"""

_GP_LIMIT = """\
# gnuplot script; expects profile.csv in this directory
set datafile separator ','
set terminal pngcairo size 800,600
set output 'plot_profile.png'
set xlabel 'r'
plot 'profile.csv' using 1:2 skip 1 with lines title 'w(r)', \\
     'profile.csv' using 1:3 skip 1 with lines title \"w'(r)\"
"""


def _limit_row(dim: int, beta: float, mass: float):
    cfg = LimitConfig(dim, beta, mass)
    sol = solve_limit(cfg)
    cons = limit_constants(sol)
    res = check_identities(sol)
    amp_w, amp_dw = tail_amplitudes(sol)
    row = (dim, beta, mass, sol.mu, sol.rbar, cons.wall_value, cons.gamma,
           cons.gamma1, cons.big_gamma, cons.grad_half, cons.mass_half,
           res["moment_balance"], res["pohozaev"], res["c1_matching"],
           amp_w, amp_dw)
    return sol, cons, res, row


def _cmd_limit(args, out: Path) -> dict:
    sol, cons, res, row = _limit_row(args.dim, args.beta, args.mass)
    _write_csv(out / "results.csv", "limit", [row])
    print(f"mu = {sol.mu:.17g}")
    print(f"rbar = {sol.rbar:.17g}")
    print(f"Gamma = {cons.big_gamma:.17g}")
    print(f"gamma = {cons.gamma:.17g}   gamma1 = {cons.gamma1:.17g}")
    print(f"grad_half = {cons.grad_half:.17g}   mass_half = {cons.mass_half:.17g}")
    for name, val in res.items():
        print(f"residual {name} = {val:.3e}")
    if args.figures:
        figures.render_limit(sol, cons, out)
    if args.plot_script:
        from .radial import eval_profile

        r = np.linspace(0.0, 8.0 * sol.rbar, 400)
        w, dw = eval_profile(sol, r)
        lines = ["r,w,dw"] + [
            ",".join(_fmt(v) for v in t) for t in zip(r, w, dw)]
        (out / "profile.csv").write_text("\n".join(lines) + "\n")
        (out / "plot.gp").write_text(_GP_LIMIT)
    return {}


def _cmd_identities(args, out: Path) -> dict:
    rows = []
    for dim in args.dims:
        for beta in args.betas:
            _, _, res, row = _limit_row(dim, beta, args.mass)
            rows.append(row)
            print(f"N={dim} beta={beta}: " + "  ".join(
                f"{k}={v:.3e}" for k, v in res.items()))
    _write_csv(out / "results.csv", "limit", rows)
    return {}


def _build_seed(mesh, args):
    if args.design == "centered":
        return seed_designs(mesh, args.beta, args.delta, Centered())[0]
    if args.design == "boundary":
        return seed_designs(mesh, args.beta, args.delta, BoundaryCaps(1))[0]
    return seed_designs(mesh, args.beta, args.delta,
                        RandomCaps(1, args.rng_seed))[0]


def _cmd_solve(args, out: Path) -> dict:
    mesh, _ = _mesh_from_args(args, args.h)
    design = _build_seed(mesh, args)
    result = principal_lambda(mesh, design)
    p_idx = asymptotics.nodal_argmax(mesh, result.u)
    point = mesh.vertices[p_idx]
    max_y = float(point[1]) if mesh.dim == 2 else 0.0
    row = (args.beta, design.delta, args.h, result.lam, result.rayleigh,
           result.rho_residual, result.iterations, len(mesh.vertices),
           len(mesh.elements), float(point[0]), max_y,
           asymptotics.boundary_distance(mesh, point))
    _write_csv(out / "results.csv", "solve", [row])
    _design_csv(out / "design.csv", design)
    print(f"lambda = {result.lam:.17g}  (rho residual {result.rho_residual:.2e}, "
          f"{result.iterations} evaluations)")
    if args.figures:
        figures.render_field(mesh, design, result.u, out, stem="fig")
    if args.plot_script:
        _field_csv(out / "field.csv", mesh, result.u)
        (out / "plot.gp").write_text(_GP_FIELD.format(ucol=mesh.dim + 1))
    return {}


def _seeds_from_flags(mesh, args):
    seeds = []
    if args.caps:
        seeds += seed_designs(mesh, args.beta, args.delta, BoundaryCaps(args.caps))
    if args.centered:
        seeds += seed_designs(mesh, args.beta, args.delta, Centered())
    if args.random:
        seeds += seed_designs(mesh, args.beta, args.delta,
                              RandomCaps(args.random, args.rng_seed))
    return seeds


def _cmd_optimize(args, out: Path) -> dict:
    mesh, _ = _mesh_from_args(args, args.h)
    seeds = _seeds_from_flags(mesh, args)
    best, states = optimize(mesh, args.beta, args.delta, seeds, tol=args.tol,
                            max_iter=args.max_iter,
                            workers=_workers(len(seeds)), return_all=True)
    reported = [best] + [
        st for st in states
        if st is not best
        and abs(st.eigen.lam - best.eigen.lam) <= args.tol * max(1.0, best.eigen.lam)
    ]
    rows = []
    for st in reported:
        p_idx = asymptotics.nodal_argmax(mesh, st.eigen.u)
        point = mesh.vertices[p_idx]
        max_y = float(point[1]) if mesh.dim == 2 else 0.0
        rows.append((st.seed_id, st.eigen.lam, st.iteration, st.converged,
                     st.sym_diff_history[-1] if st.sym_diff_history else 0.0,
                     st.design.delta, args.h, len(mesh.elements),
                     float(point[0]), max_y,
                     asymptotics.boundary_distance(mesh, point),
                     _design_intervals(mesh, st.design)))
    _write_csv(out / "results.csv", "optimize", rows)
    _design_csv(out / "design.csv", best.design)
    print(f"lambda = {best.eigen.lam:.17g} after {best.iteration} iterations "
          f"(seed {best.seed_id}, converged={best.converged})")
    if mesh.dim == 1:
        print(f"design intervals: {_design_intervals(mesh, best.design)}")
    if len(reported) > 1:
        print(f"degenerate optima: seeds {[st.seed_id for st in reported]}")
    if args.figures:
        figures.render_field(mesh, best.design, best.eigen.u, out, stem="fig")
    if args.plot_script:
        _field_csv(out / "field.csv", mesh, best.eigen.u)
        (out / "plot.gp").write_text(_GP_FIELD.format(ucol=mesh.dim + 1))
    return {}


def _cmd_sweep(args, out: Path) -> dict:
    shape = _shape_from_args(args)
    dim = 1 if isinstance(shape, Interval) else 2
    settings = asymptotics.SweepSettings(
        h_factor=args.h_factor,
        h_power=args.h_power,
        caps=args.caps,
        centered=args.centered,
        random_seeds=args.random,
        rng_seed=args.rng_seed,
        tol=args.tol,
        max_iter=args.max_iter,
        workers=_workers(len(args.deltas)),
    )
    records, failures = asymptotics.sweep(shape, args.beta, args.deltas, settings)
    if not records:
        raise EigendesignError(
            "all sweep entries failed: " + "; ".join(f.message for f in failures))

    cfg = LimitConfig(dim, args.beta)
    cons = limit_constants(solve_limit(cfg))
    hhat = _max_mean_curvature(shape)
    bound = {
        r.delta: asymptotics.predicted_bound(r.delta, cfg, cons, hhat)
        for r in records
    }
    rows = []
    for r in records:
        max_y = r.maximizer[1] if dim == 2 else 0.0
        rows.append((r.delta, r.od_value, r.rescaled, bound[r.delta],
                     r.maximizer[0], max_y, r.dist_boundary,
                     r.annulus_ok.get(0.25, False), r.annulus_ok.get(0.5, False),
                     r.boundary_contact, r.min_over_d, r.connected_components,
                     r.seed_id, r.h, r.n_elements, r.iterations))
    _write_csv(out / "results.csv", "sweep", rows)
    target = asymptotics.rescaled_target(shape, args.beta)
    print(f"rescaled limit coefficient: {target:.8f}")
    for r in records:
        print(f"delta={r.delta:g}: od={r.od_value:.8g} rescaled={r.rescaled:.8g} "
              f"dist_boundary={r.dist_boundary:.3g} "
              f"components={r.connected_components}")
    for f in failures:
        print(f"sweep entry delta={f.delta:g} failed: {f.message}", file=sys.stderr)
    if args.figures:
        figures.render_sweep(records, dim, out, target=target, bound=bound)
    if args.plot_script:
        (out / "plot.gp").write_text(_GP_SWEEP)
    return {"failures": "; ".join(f"{f.delta}: {f.message}" for f in failures) or "none"}


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory (created if needed)")
    p.add_argument("--config", default=None,
                   help="file with one flag per line; command line takes precedence")
    p.add_argument("--no-figures", dest="figures", action="store_false",
                   help="skip rendering PNG figures next to results.csv")
    p.add_argument("--plot-script", action="store_true",
                   help="emit a gnuplot script referencing the emitted CSVs")


def _add_shape(p: argparse.ArgumentParser, mesh_file: bool) -> None:
    p.add_argument("--shape", choices=("interval", "rectangle", "disk", "ellipse"),
                   default="interval")
    p.add_argument("--len", type=float, default=1.0, help="interval length")
    p.add_argument("--radius", type=float, default=1.0, help="disk radius")
    p.add_argument("--a", type=float, default=1.0, help="rectangle/ellipse x size")
    p.add_argument("--b", type=float, default=1.0, help="rectangle/ellipse y size")
    if mesh_file:
        p.add_argument("--mesh-file", default=None,
                       help="import a mesh in the text format instead of --shape")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="eigendesign",
        description="Optimal design of the positive principal eigenvalue for "
                    "bang-bang weighted Neumann problems.",
        epilog="results.csv schemas: "
               + " | ".join(f"{k}: {v}" for k, v in _SCHEMAS.items()),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("limit", help="solve the radial limit problem")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mass", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("identities", help="residuals of the profile identities")
    p.add_argument("--dims", type=_int_list, default=[1, 2, 3])
    p.add_argument("--betas", type=_float_list, default=[0.5, 1.0, 4.0])
    p.add_argument("--mass", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=_cmd_identities)

    p = sub.add_parser("solve", help="principal eigenvalue of one design")
    _add_shape(p, mesh_file=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--design", choices=("boundary", "centered", "random"),
                   default="boundary")
    p.add_argument("--rng-seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("optimize", help="minimize lambda over designs of fixed measure")
    _add_shape(p, mesh_file=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--caps", type=int, default=8,
                   help="number of boundary-cap seeds")
    p.add_argument("--no-centered", dest="centered", action="store_false",
                   help="drop the centered seed")
    p.add_argument("--random", type=int, default=0,
                   help="number of random seeds")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", help="optimize over a list of measures")
    _add_shape(p, mesh_file=False)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--deltas", type=_float_list, required=True)
    p.add_argument("--h-factor", type=float, default=12.0)
    p.add_argument("--h-power", type=float, default=None,
                   help="mesh size h = delta^power / factor (default 1/N)")
    p.add_argument("--caps", type=int, default=8)
    p.add_argument("--no-centered", dest="centered", action="store_false")
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=60)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Splice flags from a --config file in after the subcommand, so that
    command-line flags (parsed later) take precedence."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv  # let argparse report the missing value
    path = Path(argv[idx + 1])
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    extra: list[str] = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        flag, _, value = line.partition("=") if "=" in line.split()[0] else line.partition(" ")
        flag = flag.strip()
        if not flag.startswith("--"):
            flag = "--" + flag
        extra.append(flag)
        if value.strip():
            extra.append(value.strip())
    head, tail = argv[:1], argv[1:]
    return head + extra + tail


def main(argv: list[str] | None = None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    try:
        expanded = _expand_config(raw)
    except (OSError, FileNotFoundError) as exc:
        print(f"eigendesign: error: {exc}", file=sys.stderr)
        return 1
    parser = build_parser()
    try:
        args = parser.parse_args(expanded)
    except SystemExit as exc:
        return int(exc.code or 0)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        extra = args.func(args, out)
    except (ValueError, TypeError, FileNotFoundError) as exc:
        print(f"eigendesign: error: {exc}", file=sys.stderr)
        return 1
    except EigendesignError as exc:
        module = type(exc).__module__.rsplit(".", 1)[-1]
        print(f"{module}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _write_meta(out / "meta.txt", args, extra)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
