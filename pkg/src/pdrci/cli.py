"""Command-line surface.

Subcommands: template, synth, simulate, verify, export, sweep-kappa.
Models are either JSON files or the names of bundled examples
(double-integrator, vanderpol, vehicle). Exit codes: 0 success,
1 verification or run failure, 2 solver failure. Report paths write
matplotlib figures next to their CSV/JSON unless --no-plot is given.
Set PDRCI_SOLVER_THREADS to bound solver threading.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import control, examples, io, plots, verify
from .control import ControllerState, OutsideSetError
from .models import AssumptionError
from .synthesis import (SolverInfeasibleError, SolverNumericalError,
                        SynthesisSpec, synthesize, synthesize_quasi_lpv)
from .template_init import InfeasibleAtInitError, SingularWError
from .templates import build_template

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SOLVER = 2


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SolverInfeasibleError, SolverNumericalError, InfeasibleAtInitError,
            SingularWError, AssumptionError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OutsideSetError as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except plots.DegenerateSliceError as exc:
        print(f"export failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pdrci",
        description="parameter-dependent invariant polytope synthesis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="build a template and write it as JSON")
    _model_args(p)
    p.add_argument("--spec", required=True,
                   help="mrci | polygon:M | nlp | nlp:CHAT_JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--degenerate-vertices", choices=("error", "first"),
                   default="error")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("synth", help="synthesize a set family for a template")
    _model_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quasi", action="store_true",
                   help="parameter-independent representation (offsets fixed)")
    p.add_argument("--metric", default=None,
                   help="coverage directions: 'template', 'example', or a JSON "
                        "file with a matrix under key D")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="closed-loop run under the vertex law")
    _model_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--x0", default=None, help="comma-separated state")
    p.add_argument("--p0", default=None, help="comma-separated parameter")
    p.add_argument("--disturbance", choices=("vertices", "uniform"),
                   default="vertices")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="independent residual checks")
    _model_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="boundary loops of 2D set projections")
    _model_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--plane", default="1,2",
                   help="two 1-based coordinate indices, e.g. 1,3")
    p.add_argument("--params", default=None,
                   help="semicolon-separated parameter vectors")
    p.add_argument("--zetas", default=None,
                   help="comma-separated scalars for the double-integrator map")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("sweep-kappa", help="rate-bound sweep of the coverage sum")
    _model_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--kappas", default="0.05,0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def _model_args(p):
    p.add_argument("--model", required=True,
                   help="model JSON path or example name "
                        f"({', '.join(sorted(examples.EXAMPLES))})")
    p.add_argument("--kappa", type=float, default=None,
                   help="rate bound scale override (examples only)")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def _load_model(args):
    """Returns (problem, bundle-or-None)."""
    name = args.model
    if name in examples.EXAMPLES:
        kwargs = {}
        if args.kappa is not None:
            kwargs["kappa"] = args.kappa
        if args.mu is not None:
            kwargs["mu"] = args.mu
        if args.delta is not None:
            kwargs["delta"] = args.delta
        bundle = examples.EXAMPLES[name](**kwargs)
        return bundle.problem, bundle
    if not os.path.exists(name):
        raise SystemExit(f"model {name!r} is neither a file nor a known example")
    return io.load_problem(name), None


def _parse_vec(text):
    return np.array([float(v) for v in text.split(",")])


def cmd_template(args):
    problem, bundle = _load_model(args)
    spec = args.spec
    init_result, C_hat = None, None
    if spec == "mrci":
        template = examples.mrci_template(problem)
    elif spec.startswith("polygon:"):
        template = examples.polygon_template(int(spec.split(":", 1)[1]))
    elif spec == "nlp" or spec.startswith("nlp:"):
        if spec.startswith("nlp:"):
            C_hat = np.array(io.load_json(spec.split(":", 1)[1])["C_hat"], float)
        elif bundle is not None and "C_hat" in bundle.data:
            C_hat = bundle.data["C_hat"]
        elif problem.sys.n == 2:
            C_hat = examples.uniform_polygon(8)
        else:
            raise SystemExit("nlp spec needs seed rows: pass nlp:FILE.json")
        D = bundle.D if bundle is not None and bundle.D is not None else None
        template, init_result = examples.nlp_template(
            problem, C_hat, D=D, degenerate_vertices=args.degenerate_vertices)
    else:
        raise SystemExit(f"unknown template spec {spec!r}")
    io.save_template(template, args.out, init_result=init_result, C_hat=C_hat)
    print(f"template: {template.m_s} rows, {template.N} vertices -> {args.out}")
    return EXIT_OK


def _resolve_metric(args, bundle, template):
    choice = args.metric
    if choice is None:
        choice = "example" if bundle is not None and bundle.D is not None else "template"
    if choice == "template":
        return template.C
    if choice == "example":
        if bundle is None or bundle.D is None:
            raise SystemExit("model has no canonical coverage directions")
        return bundle.D
    return np.array(io.load_json(choice)["D"], float)


def cmd_synth(args):
    problem, bundle = _load_model(args)
    template = io.load_template(args.template)
    quasi = args.quasi or (bundle is not None and bundle.quasi)
    spec = SynthesisSpec(problem=problem, template=template,
                         D=_resolve_metric(args, bundle, template))
    solution = synthesize_quasi_lpv(spec) if quasi else synthesize(spec)
    io.save_solution(solution, args.out)
    replay = solution.stats["replay"]
    print(f"objective {solution.stats['objective']:.6g}, "
          f"solver {solution.stats['solver_status']}, "
          f"replay {'pass' if replay['pass'] else 'FAIL'} "
          f"(lmi min eig {replay['lmi_min_eig']:.2e}) -> {args.out}")
    return EXIT_OK if replay["pass"] else EXIT_FAIL


def cmd_simulate(args):
    problem, bundle = _load_model(args)
    template = io.load_template(args.template)
    solution = io.load_solution(args.solution)
    rng = np.random.default_rng(args.seed)
    ctrl = ControllerState(solution=solution, template=template, problem=problem)
    param_fn = bundle.param_of_state if bundle is not None and bundle.quasi else None
    if args.p0 is not None:
        p0 = _parse_vec(args.p0)
    else:
        p0 = problem.vertices_P.vertices.mean(axis=0)
    if args.x0 is not None:
        x0 = _parse_vec(args.x0)
        if param_fn is not None and args.p0 is None:
            p0 = param_fn(x0)
    else:
        if param_fn is not None:
            x0 = np.zeros(problem.sys.n)
            p0 = param_fn(x0)
        else:
            from .templates import vertices_at

            y0 = solution.offsets_at(p0)
            x0 = vertices_at(template, y0).vertices.mean(axis=0)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "trajectory.csv")
    summary_path = os.path.join(args.out_dir, "summary.json")
    try:
        traj = control.simulate(ctrl, x0, p0, args.steps, rng,
                                disturbance=args.disturbance, param_fn=param_fn)
    except OutsideSetError as exc:
        if exc.trajectory is not None:
            io.trajectory_to_csv(exc.trajectory, csv_path)
            io.dump_json({"completed": False, "error": str(exc),
                          "violations": [list(v) for v in exc.trajectory.violations]},
                         summary_path)
        raise
    io.trajectory_to_csv(traj, csv_path)
    io.dump_json({
        "completed": True,
        "steps": traj.horizon,
        "max_residual": traj.max_residual,
        "violations": [list(v) for v in traj.violations],
    }, summary_path)
    if not args.no_plot:
        fig = plots.plot_trajectory(traj, title="closed-loop run")
        plots.save_figure(fig, os.path.join(args.out_dir, "trajectory.png"))
    print(f"{traj.horizon} steps, max residual {traj.max_residual:.3e} "
          f"-> {csv_path}")
    return EXIT_OK


def cmd_verify(args):
    problem, _ = _load_model(args)
    template = io.load_template(args.template)
    solution = io.load_solution(args.solution)
    rng = np.random.default_rng(args.seed)
    report = verify.verify_solution(solution, template, problem,
                                    n_samples=args.samples, rng=rng)
    if args.out:
        io.dump_json(report.to_dict(), args.out)
    for name, ok in report.passes.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"max invariance residual {report.max_invariance_residual:.3e}")
    return EXIT_OK if report.all_pass else EXIT_FAIL


def cmd_export(args):
    problem, bundle = _load_model(args)
    template = io.load_template(args.template)
    solution = io.load_solution(args.solution)
    plane = tuple(int(i) - 1 for i in args.plane.split(","))
    if len(plane) != 2:
        raise SystemExit("--plane needs exactly two indices")
    if args.zetas is not None:
        if bundle is None or bundle.name != "double-integrator":
            raise SystemExit("--zetas applies to the double-integrator example")
        params = [examples.zeta_to_param(z) for z in _parse_vec(args.zetas)]
        labels = [f"zeta={z:g}" for z in _parse_vec(args.zetas)]
    elif args.params is not None:
        params = [_parse_vec(part) for part in args.params.split(";")]
        labels = [f"p={part}" for part in args.params.split(";")]
    else:
        params = [v for v in problem.vertices_P.vertices]
        labels = [f"vertex {i}" for i in range(len(params))]
    os.makedirs(args.out_dir, exist_ok=True)
    loops = []
    for i, p in enumerate(params):
        loop = plots.slice_loop(solution, template, p, plane)
        loops.append(loop)
        io.boundary_to_csv(
            loop, os.path.join(args.out_dir, f"slice_{i}.csv"),
            labels=(f"x{plane[0] + 1}", f"x{plane[1] + 1}"))
    if not args.no_plot:
        fig = plots.plot_slices(loops, labels,
                                axis_labels=(f"x{plane[0] + 1}", f"x{plane[1] + 1}"))
        plots.save_figure(fig, os.path.join(args.out_dir, "slices.png"))
    print(f"{len(loops)} slices -> {args.out_dir}")
    return EXIT_OK


def cmd_sweep(args):
    if args.model != "double-integrator":
        raise SystemExit("sweep-kappa is defined for the double-integrator example")
    template = io.load_template(args.template)
    kappas = [float(v) for v in args.kappas.split(",")]
    rng = np.random.default_rng(args.seed)
    zetas = rng.uniform(-0.25, 0.25, size=args.samples)
    params = [examples.zeta_to_param(z) for z in zetas]
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for kappa in kappas:
        bundle = examples.double_integrator(kappa=kappa)
        spec = SynthesisSpec(problem=bundle.problem, template=template,
                             D=template.C)
        solution = synthesize(spec)
        io.save_solution(
            solution, os.path.join(args.out_dir, f"solution_kappa{kappa:g}.json"))
        total = verify.dtot(solution, bundle.problem, params, template=template)
        rows.append((kappa, solution.stats["objective"], total))
        print(f"kappa={kappa:g}: dtot={total:.4f}")
    csv_path = os.path.join(args.out_dir, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write("kappa,objective,dtot\n")
        for kappa, obj, total in rows:
            fh.write(f"{io.fmt_float(kappa)},{io.fmt_float(obj)},{io.fmt_float(total)}\n")
    io.dump_json({"kappas": kappas, "dtot": [r[2] for r in rows],
                  "samples": args.samples, "seed": args.seed},
                 os.path.join(args.out_dir, "sweep.json"))
    if not args.no_plot:
        fig = plots.plot_sweep(kappas, [r[2] for r in rows])
        plots.save_figure(fig, os.path.join(args.out_dir, "sweep.png"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
