"""Command-line front end: reproducible spectral / control runs on network files.

Every subcommand writes its artifacts plus a manifest.json capturing the full
configuration, seed and package version (no timestamps), so a rerun with the
same manifest reproduces every CSV byte for byte.  Files are written to a
temporary sibling and renamed, never partially.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ExactControllabilityError, GraphonError, NumericsError, ParseError
from .functions import PiecewiseConstantFunction
from .graphons import SinusoidalGraphon, StepGraphon
from .spectral import decompose, fourier_truncate, l2_distance, truncate, truncation_error
from .control import (
    GraphonSystem,
    exact_controllability_check,
    gramian,
    gramian_quadrature_matrix,
    min_energy_control,
    simulate,
)
from .epidemic import (
    EpidemicModel,
    closed_loop_cost,
    linear_feedback,
    project_trajectories,
    simulate_linearized,
    simulate_nonlinear,
    solve_riccati_finite,
)
from . import netio
from .spectral import eigenvalue_convergence_experiment


# -- output plumbing -----------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _atomic_write(path: Path, text: str):
    tmp = path.parent / (path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_csv(path: Path, header: list, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: Path, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_kernel_csv(out: Path, stem: str, coeffs: np.ndarray, family: str,
                     normalization: str):
    n = coeffs.shape[0]
    write_csv(out / f"{stem}.csv", [f"c{j}" for j in range(n)], coeffs)
    write_json(out / f"{stem}.json",
               {"n": n, "family": family, "normalization": normalization})


def write_manifest(out: Path, command: str, args: argparse.Namespace):
    # the output directory is where the manifest lives, not part of the run
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("handler", "out")}
    write_json(out / "manifest.json",
               {"command": command, "config": config,
                "seed": config.get("seed"), "version": __version__})


# -- input plumbing -------------------------------------------------------------

def load_dataset(path_text: str, degree_sort: bool = False) -> netio.NetworkDataset:
    path = Path(path_text)
    data = path.read_bytes()
    if path.suffix == ".mtx" or data.lstrip().startswith(b"%%MatrixMarket"):
        ds = netio.parse_matrix_market(data, name=path.stem)
    else:
        ds = netio.parse_edge_list(data, name=path.stem)
    return ds.degree_sorted() if degree_sort else ds


def load_vector(path_text: str) -> np.ndarray:
    values = [float(line) for line in Path(path_text).read_text().split()]
    if not values:
        raise ParseError(f"{path_text}: no values")
    return np.array(values)


def parse_kernel_spec(spec: str):
    """Kernel argument: 'constant:c', 'sinusoidal:a0[,b1,...]', or a network file."""
    if spec.startswith("constant:"):
        return StepGraphon([[float(spec.partition(":")[2])]])
    if spec.startswith("sinusoidal:"):
        parts = [float(v) for v in spec.partition(":")[2].split(",")]
        return SinusoidalGraphon(parts[0], parts[1:])
    return netio.to_step_graphon(load_dataset(spec))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _contact_graphon(args) -> StepGraphon:
    ds = load_dataset(args.network, getattr(args, "degree_sort", False))
    return netio.to_step_graphon(ds, normalize=args.normalize,
                                 symmetrize=args.symmetrize)


# -- subcommands -----------------------------------------------------------------

def cmd_spectra(args):
    out = _out_dir(args)
    ds = load_dataset(args.network, args.degree_sort)
    report = netio.spectral_report(ds, top_fraction=args.top_fraction)
    write_json(out / "spectral_report.json", report.to_json_dict())
    write_csv(out / "eigenvalues.csv", ["index", "eigenvalue"],
              ((i, v) for i, v in enumerate(report.eigenvalues)))
    kernel = netio.to_step_graphon(ds, normalize=args.normalize,
                                   symmetrize=args.symmetrize)
    write_kernel_csv(out, "original_kernel", kernel.coeffs, "step", args.normalize)
    decomp = decompose(kernel)
    rank = min(report.top_k, decomp.rank)
    approx = (truncate(decomp, rank).coeffs if rank
              else np.zeros_like(kernel.coeffs))
    write_kernel_csv(out, "approx_kernel", approx, "step", args.normalize)
    write_manifest(out, "spectra", args)


def cmd_approx(args):
    out = _out_dir(args)
    kernel = _contact_graphon(args)
    decomp = decompose(kernel)
    ranks = range(decomp.rank + 1)
    if args.rank is not None:
        if not 0 <= args.rank <= decomp.rank:
            raise ValueError(f"--rank must be in [0, {decomp.rank}]")
        ranks = [args.rank]
    write_csv(out / "truncation_curve.csv", ["rank", "truncation_error"],
              ((m, truncation_error(decomp, m)) for m in ranks))
    if args.fourier_order is not None:
        rows = []
        for m in ranks:
            approx, bound = fourier_truncate(decomp, m, args.fourier_order)
            rows.append((m, bound, l2_distance(kernel, approx)))
        write_csv(out / "fourier_bounds.csv", ["rank", "bound", "measured"], rows)
    write_manifest(out, "approx", args)


def _system_from_args(args) -> GraphonSystem:
    poly = tuple(float(v) for v in args.b_poly.split(",")) if args.b_poly else ()
    return GraphonSystem(args.alpha0, args.beta0, _contact_graphon(args),
                         poly, args.horizon)


def cmd_gramian(args):
    out = _out_dir(args)
    sys_ = _system_from_args(args)
    w = gramian(sys_)
    verdict = exact_controllability_check(sys_)
    payload = {
        "scalar_part": w.scalar,
        "directions": [
            {"eigenvalue": float(lam), "eta": float(eta), "coefficient": float(c)}
            for lam, eta, c in zip(sys_.modes.eigenvalues, sys_.mode_etas,
                                   w.corrections)
        ],
        "spectral_lower_bound": verdict.spectral_lower_bound,
        "controllable": verdict.controllable,
        "beta0_nonzero": verdict.identity_gain_nonzero,
        "horizon": sys_.horizon,
    }
    if args.oracle:
        reference = gramian_quadrature_matrix(sys_)
        closed = w.as_matrix()
        payload["oracle_relative_error"] = float(
            np.linalg.norm(closed - reference) / max(np.linalg.norm(reference), 1e-300))
    write_json(out / "gramian.json", payload)
    write_manifest(out, "gramian", args)


def cmd_minenergy(args):
    out = _out_dir(args)
    sys_ = _system_from_args(args)
    n = sys_.kernel.num_blocks
    x0 = PiecewiseConstantFunction(load_vector(args.x0) if args.x0 else np.ones(n))
    control, energy = min_energy_control(sys_, x0)
    trajectory = simulate(sys_, x0, control, step=args.step)
    norms = trajectory.state_norms()
    control_norms = (np.linalg.norm(trajectory.controls, axis=1)
                     / np.sqrt(trajectory.num_blocks))
    write_csv(out / "minenergy_trajectory.csv",
              ["time", "state_norm", "control_norm"],
              zip(trajectory.times, norms, control_norms))
    write_json(out / "minenergy.json", {
        "energy": energy,
        "initial_norm": float(norms[0]),
        "final_norm": float(norms[-1]),
    })
    write_manifest(out, "minenergy", args)


def cmd_epidemic(args):
    out = _out_dir(args)
    contact = _contact_graphon(args)
    model = EpidemicModel(contact, alpha=args.alpha0, beta0=args.beta0,
                          eta=args.eta, state_weight=args.qt,
                          terminal_weight=args.qT, horizon=args.horizon)
    n = model.num_nodes
    p0 = load_vector(args.p0) if args.p0 else np.full(n, 0.1)
    num_steps = max(1, round(args.horizon / args.step)) if args.step else 1000

    sol = solve_riccati_finite(model, num_steps=args.riccati_steps)
    feedback = linear_feedback(model, sol)
    controlled = simulate_linearized(model, p0, feedback, num_steps)
    uncontrolled = simulate_linearized(model, p0, None, num_steps)
    report = project_trajectories(controlled, model.modes)

    mode_names = [f"mode{j}" for j in range(sol.eigenvalues.size)]
    write_csv(out / "riccati.csv", ["time", "auxiliary"] + mode_names,
              (np.concatenate(([t, a], row)) for t, a, row in
               zip(sol.times, sol.auxiliary, sol.modes)))
    node_names = [f"node{i}" for i in range(n)]
    write_csv(out / "states.csv", ["time"] + node_names,
              (np.concatenate(([t], row)) for t, row in
               zip(controlled.times, controlled.states)))
    write_csv(out / "controls.csv", ["time"] + node_names,
              (np.concatenate(([t], row)) for t, row in
               zip(controlled.times, controlled.controls)))
    write_csv(out / "eigenstates.csv", ["time"] + mode_names,
              (np.concatenate(([t], row)) for t, row in
               zip(report.times, report.state_coefficients)))
    write_csv(out / "eigencontrols.csv", ["time"] + mode_names,
              (np.concatenate(([t], row)) for t, row in
               zip(report.times, report.control_coefficients)))
    write_csv(out / "auxiliary.csv",
              ["time"] + [f"p_{s}" for s in node_names] + [f"u_{s}" for s in node_names],
              (np.concatenate(([t], prow, urow)) for t, prow, urow in
               zip(report.times, report.auxiliary_states, report.auxiliary_controls)))
    costs = {
        "optimal": closed_loop_cost(model, controlled),
        "zero_control": closed_loop_cost(model, uncontrolled),
    }
    if args.nonlinear:
        nonlinear = simulate_nonlinear(model, np.clip(p0, 0.0, 1.0), feedback,
                                       num_steps)
        write_csv(out / "nonlinear_states.csv", ["time"] + node_names,
                  (np.concatenate(([t], row)) for t, row in
                   zip(nonlinear.times, nonlinear.states)))
        costs["nonlinear_closed_loop"] = closed_loop_cost(model, nonlinear)
        costs["nonlinear_range_warning"] = nonlinear.range_warning
    write_json(out / "cost.json", costs)
    write_manifest(out, "epidemic", args)


def cmd_sample(args):
    out = _out_dir(args)
    kernel = parse_kernel_spec(args.kernel)
    if args.converge:
        if not args.sizes:
            raise ValueError("--converge needs --sizes")
        sizes = [int(s) for s in args.sizes.split(",")]
        rows = []
        for offset in range(args.num_seeds):
            seed = args.seed + offset

            def sampler(size, _seed=seed):
                return netio.sample_graph(kernel, size, _seed).adjacency()

            for row in eigenvalue_convergence_experiment(sampler, sizes, kernel):
                rows.append((row.size, seed, row.max_error)
                            + row.scaled_eigenvalues + row.limit_eigenvalues)
        k = len(rows[0][3:]) // 2 if rows else 0
        header = (["size", "seed", "max_error"]
                  + [f"scaled{i}" for i in range(k)]
                  + [f"limit{i}" for i in range(k)])
        write_csv(out / "convergence.csv", header, rows)
    else:
        ds = netio.sample_graph(kernel, args.num_nodes, args.seed)
        _atomic_write(out / f"{ds.name}.edges", netio.write_edge_list(ds))
    write_manifest(out, "sample", args)


# -- parser ----------------------------------------------------------------------

def _add_io_flags(sub, network: bool = True):
    if network:
        sub.add_argument("network", help="edge-list or MatrixMarket file")
        sub.add_argument("--normalize", choices=["max-abs", "none"],
                         default="max-abs", help="kernel normalization")
        sub.add_argument("--symmetrize", action="store_true",
                         help="accept asymmetric data, keep larger-|w| orientation")
    sub.add_argument("--out", default=".", help="output directory")


def _add_system_flags(sub):
    sub.add_argument("--alpha0", type=float, default=0.0, help="identity drift")
    sub.add_argument("--beta0", type=float, default=1.0, help="identity input gain")
    sub.add_argument("--b-poly", default="",
                     help="comma-separated kernel-polynomial input coefficients")
    sub.add_argument("--horizon", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphonctl",
        description="Spectral representation, approximation and control of "
                    "graphon network systems")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command")

    sp = subs.add_parser("spectra", help="eigenvalue report and low-rank kernel")
    _add_io_flags(sp)
    sp.add_argument("--top-fraction", type=float, default=0.10)
    sp.add_argument("--degree-sort", action="store_true",
                    help="relabel nodes by descending degree first")
    sp.set_defaults(handler=cmd_spectra)

    ap = subs.add_parser("approx", help="truncation-error curves and Fourier bounds")
    _add_io_flags(ap)
    ap.add_argument("--rank", type=int, default=None, help="single rank instead of sweep")
    ap.add_argument("--fourier-order", type=int, default=None)
    ap.set_defaults(handler=cmd_approx)

    gr = subs.add_parser("gramian", help="closed-form controllability Gramian")
    _add_io_flags(gr)
    _add_system_flags(gr)
    gr.add_argument("--oracle", action="store_true",
                    help="also integrate the Gramian numerically and report the gap")
    gr.set_defaults(handler=cmd_gramian)

    me = subs.add_parser("minenergy", help="minimum-energy steering to the origin")
    _add_io_flags(me)
    _add_system_flags(me)
    me.add_argument("--x0", default=None, help="file of initial block values")
    me.add_argument("--step", type=float, default=None, help="integration step")
    me.set_defaults(handler=cmd_minenergy)

    ep = subs.add_parser("epidemic", help="spectral LQR for the linearized spread")
    _add_io_flags(ep)
    ep.add_argument("--alpha0", type=float, default=-0.5, help="recovery rate")
    ep.add_argument("--beta0", type=float, default=1.0)
    ep.add_argument("--eta", type=float, default=1.5, help="per-pair infection strength")
    ep.add_argument("--qt", type=float, default=2.0, help="running state weight")
    ep.add_argument("--qT", type=float, default=4.0, help="terminal state weight")
    ep.add_argument("--horizon", type=float, default=1.0)
    ep.add_argument("--step", type=float, default=None, help="simulation step")
    ep.add_argument("--riccati-steps", type=int, default=10_000)
    ep.add_argument("--p0", default=None, help="file of initial infected fractions")
    ep.add_argument("--nonlinear", action="store_true",
                    help="also run the nonlinear model under the linear feedback")
    ep.set_defaults(handler=cmd_epidemic)

    sa = subs.add_parser("sample", help="draw exchangeable random graphs from a kernel")
    _add_io_flags(sa, network=False)
    sa.add_argument("--kernel", required=True,
                    help="'constant:c', 'sinusoidal:a0,b1,...', or a network file")
    sa.add_argument("--num-nodes", type=int, default=100)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--converge", action="store_true",
                    help="eigenvalue-convergence table over --sizes")
    sa.add_argument("--sizes", default="", help="comma-separated sizes for --converge")
    sa.add_argument("--num-seeds", type=int, default=1)
    sa.set_defaults(handler=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        handler(args)
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ParseError, ExactControllabilityError, GraphonError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
