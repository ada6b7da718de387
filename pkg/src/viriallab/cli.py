"""Command-line front end.

Subcommands: weight-check, simulate, virial-report, blowup-scan,
ground-state.  Exit codes: 0 success, 1 failed check or aborted run,
2 bad arguments or config, 10 blow-up detected (the expected outcome of
the negative-energy scenarios).  The env var VIRIALLAB_OUT overrides the
output root for relative --out paths.  All outputs are deterministic.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import pathlib
import sys

import numpy as np

from . import evolve as ev
from . import functionals as fn
from . import soliton as sol
from . import virial_analysis as va
from . import weight
from .field import GraphField, LineField, lp_norm

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BADARGS = 2
EXIT_BLOWUP = 10


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _out_path(arg: str | None, default: str) -> pathlib.Path:
    root = pathlib.Path(os.environ.get("VIRIALLAB_OUT", "."))
    p = pathlib.Path(arg) if arg else pathlib.Path(default)
    return p if p.is_absolute() else root / p


class ScenarioError(Exception):
    pass


def _build_grid(grid: dict):
    try:
        if grid["kind"] == "line":
            return LineField(
                L=float(grid["L"]),
                N=int(grid["N"]),
                values=np.zeros(int(grid["N"])),
                stagger=bool(grid.get("stagger", False)),
            )
        if grid["kind"] == "graph":
            J, M = int(grid["J"]), int(grid["M"])
            return GraphField(
                J=J,
                Ledge=float(grid["Ledge"]),
                M=M,
                vertex_values=np.zeros(J),
                edge_values=np.zeros((J, M)),
                shared_vertex=bool(grid.get("shared_vertex", True)),
            )
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"bad grid spec: {exc}") from exc
    raise ScenarioError(f"unknown grid kind {grid.get('kind')!r}")


def _build_initial(data: dict, template, model: fn.ModelSpec):
    kind = data.get("kind")
    if kind == "scaled_soliton":
        return sol.scaled_data(
            float(data["lam"]),
            float(data.get("omega", 1.0)),
            template,
            center=float(data.get("center", 0.0)),
        )
    if kind == "gaussian":
        a = float(data.get("a", 1.0))
        sigma = float(data.get("sigma", 1.0))
        c = float(data.get("center", 0.0))

        def prof(x):
            return a * np.exp(-(((x - c) / sigma) ** 2))

        if isinstance(template, LineField):
            return template.with_values(prof(template.x))
        vals = prof(template.x_full)
        vals[-1] = 0.0
        full = np.broadcast_to(vals, (template.J, template.M + 1)).copy()
        return template.with_full_values(full.astype(complex))
    if kind == "ground_state":
        gs = sol.ground_state_flow(
            model, template, omega=float(data.get("omega", 1.0)),
            tol=float(data.get("tol", 1e-8)),
        )
        if not gs.converged:
            raise ScenarioError("ground-state initial data did not converge")
        return gs.field
    if kind == "file":
        arr = np.loadtxt(data["path"], delimiter=",", skiprows=1)
        if isinstance(template, LineField):
            return template.with_values(arr[:, 1] + 1j * arr[:, 2])
        full = (arr[:, 2] + 1j * arr[:, 3]).reshape(template.J, template.M + 1)
        return template.with_full_values(full)
    raise ScenarioError(f"unknown initial_data kind {kind!r}")


def load_scenario(path) -> dict:
    try:
        with open(path) as fh:
            sc = json.load(fh)
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: line {exc.lineno}") from exc
    for key in ("name", "model", "initial_data", "grid", "solver"):
        if key not in sc:
            raise ScenarioError(f"scenario missing field {key!r}")
    return sc


def bundled_scenario_path(name: str) -> pathlib.Path:
    return pathlib.Path(__file__).parent / "scenarios" / f"{name}.json"


def _scenario_pieces(sc: dict):
    try:
        model = fn.ModelSpec.from_dict(sc["model"])
        cfg = ev.SolverConfig(**sc["solver"])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"bad model/solver spec: {exc}") from exc
    template = _build_grid(sc["grid"])
    u0 = _build_initial(sc["initial_data"], template, model)
    return model, cfg, u0


def cmd_weight_check(args) -> int:
    if args.samples < 1000:
        print("error: --samples must be at least 1000", file=sys.stderr)
        return EXIT_BADARGS
    profile = None
    if args.profile:
        try:
            with open(args.profile) as fh:
                d = json.load(fh)
            profile = weight.WeightProfile(
                s1=float(d["s1"]),
                tail_coeffs=np.asarray(d["tail_coeffs"], dtype=float),
                z2=float(d["z2"]),
                z3=float(d["z3"]),
                chi_plateau=float(d.get("chi_plateau", 0.0)),
            )
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: bad profile file: {exc}", file=sys.stderr)
            return EXIT_BADARGS
    rep = weight.verify_profile(args.samples, profile=profile)
    payload = json.dumps(rep.as_dict(), indent=2)
    if args.out:
        out = _out_path(args.out, "weight_check.json")
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(payload + "\n")
    else:
        print(payload)
    if not rep.passed:
        print("failed checks: " + ", ".join(rep.failed_names()), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
        model, cfg, u0 = _scenario_pieces(sc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADARGS
    traj = ev.run(u0, model, cfg)
    R = sc.get("analysis", {}).get("R")
    Rnum = float(R) if isinstance(R, (int, float)) else None
    out = _out_path(args.out, sc["name"])
    out.mkdir(parents=True, exist_ok=True)
    ev.save_trajectory(traj, out, R=Rnum)
    if traj.verdict.status == "completed":
        return EXIT_OK
    if traj.verdict.status == "blowup_detected":
        print(
            f"blow-up detected at t = {_fmt(traj.verdict.t_detect)}"
            f" (trigger: {traj.verdict.trigger})"
        )
        return EXIT_BLOWUP
    print(f"run aborted: {traj.verdict.diagnostic}", file=sys.stderr)
    return EXIT_FAIL


def cmd_virial_report(args) -> int:
    src = pathlib.Path(args.trajectory)
    if not (src / "summary.json").exists():
        print(f"error: no trajectory at {src}", file=sys.stderr)
        return EXIT_BADARGS
    traj = ev.load_trajectory(src)
    if args.R == "auto":
        try:
            R, _, _ = va.find_R(traj.snapshots[0], traj.model)
        except (ValueError, RuntimeError) as exc:
            print(f"error: auto R selection failed: {exc}", file=sys.stderr)
            return EXIT_BADARGS
        clauses = va.selection_clauses(traj.snapshots[0], traj.model, R)
        print(f"selected R = {_fmt(R)}; clauses: {clauses[0]}, {clauses[1]}")
    else:
        try:
            R = float(args.R)
        except ValueError:
            print(f"error: bad R {args.R!r}", file=sys.stderr)
            return EXIT_BADARGS
        if R <= 0:
            print("error: R must be positive", file=sys.stderr)
            return EXIT_BADARGS
    try:
        rep = va.report(traj, R, traj.model)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADARGS
    out = _out_path(args.out, src.name + "_virial") if args.out else src
    out.mkdir(parents=True, exist_ok=True)
    from .field import tail_mass

    with open(out / "virial_report.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(
            ["t", "I", "Iprime_formula", "Isecond_fd", "rhs", "residual",
             "tail_mass", "checked", "satisfied"]
        )
        for i, t in enumerate(rep.times):
            snap = traj.snapshots[1 + i]
            wr.writerow(
                [_fmt(t), _fmt(rep.I[i]), _fmt(rep.Iprime_formula[i]),
                 _fmt(rep.Isecond_fd[i]), _fmt(rep.rhs_formula[i]),
                 _fmt(rep.residual[i]), _fmt(tail_mass(snap, R)),
                 int(rep.ineq_checked[i]), int(rep.ineq_satisfied[i])]
            )
    summary = {
        "R": rep.R,
        "eta": rep.eta,
        "eta_tilde": rep.eta_tilde,
        "max_residual": rep.max_residual(),
        "violations": rep.violations(),
    }
    if rep.eta_tilde > 0 and rep.I[0] > 0:
        summary["envelope_root"] = va.envelope(
            float(rep.I[0]), float(rep.Iprime_formula[0]), rep.eta_tilde
        )
    with open(out / "virial_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    ok = rep.max_residual() < args.tol and rep.violations() == 0
    return EXIT_OK if ok else EXIT_FAIL


def cmd_blowup_scan(args) -> int:
    if args.steps < 2 or not (args.lambda_min < args.lambda_max):
        print("error: need steps >= 2 and lambda_min < lambda_max", file=sys.stderr)
        return EXIT_BADARGS
    model = fn.ModelSpec.free()
    template = LineField(L=16.0, N=2**12, values=np.zeros(2**12))
    cfg = ev.SolverConfig(
        dt_init=1e-3, dt_max=1e-3, phase_tol=1e-3, T_end=args.T_end, snapshot_stride=1000
    )
    rows = []
    for lam in np.linspace(args.lambda_min, args.lambda_max, args.steps):
        u0 = sol.scaled_data(float(lam), 1.0, template)
        E = fn.energy(u0, model)
        traj = ev.run(u0, model, cfg)
        t_detect = traj.verdict.t_detect
        rows.append(
            [_fmt(lam), _fmt(E), traj.verdict.status,
             "" if t_detect is None else _fmt(t_detect)]
        )
    out = _out_path(args.out, "scan.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["lambda", "energy", "verdict", "t_detect"])
        wr.writerows(rows)
    return EXIT_OK


def cmd_ground_state(args) -> int:
    if args.tol <= 0:
        print("error: tol must be positive", file=sys.stderr)
        return EXIT_BADARGS
    try:
        if args.model == "free":
            model = fn.ModelSpec.free()
        elif args.model == "delta":
            model = fn.ModelSpec.delta(args.gamma)
        elif args.model == "inverse_power":
            if args.gamma < 0:
                model = None
            else:
                model = fn.ModelSpec.inverse_power(args.gamma, args.mu)
        else:
            print(f"error: unknown model {args.model!r}", file=sys.stderr)
            return EXIT_BADARGS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADARGS
    stagger = args.model == "inverse_power"
    template = LineField(L=16.0, N=2**12, values=np.zeros(2**12), stagger=stagger)
    if model is None:
        gs = sol.attractive_inverse_power_profile(
            args.gamma, args.mu, template, omega=args.omega, tol=args.tol
        )
    else:
        gs = sol.ground_state_flow(model, template, omega=args.omega, tol=args.tol)
    record = {
        "model": args.model,
        "omega": args.omega,
        "gamma": args.gamma,
        "mu": args.mu,
        "residual": gs.residual,
        "iterations": gs.iterations,
        "converged": gs.converged,
        "mass": fn.mass(gs.field),
        "linf": lp_norm(gs.field, np.inf),
    }
    if args.model == "delta":
        record["vertex_jump"] = sol.vertex_derivative_jump(gs.field)
        record["gamma_phi0"] = args.gamma * float(
            np.abs(gs.field.values[fn.origin_index(gs.field)])
        )
    if model is not None:
        record["energy"] = fn.energy(gs.field, model)
    out = _out_path(args.out, "ground_state")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "profile.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "re", "im"])
        for x, v in zip(gs.field.x, gs.field.values):
            wr.writerow([_fmt(x), _fmt(v.real), _fmt(v.imag)])
    with open(out / "record.json", "w") as fh:
        json.dump(record, fh, indent=2)
    return EXIT_OK if gs.converged else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="viriallab")
    sub = p.add_subparsers(dest="command", required=True)

    wc = sub.add_parser("weight-check", help="certify the cutoff profile")
    wc.add_argument("--samples", type=int, default=100_000)
    wc.add_argument("--profile", help="JSON file with an alternative profile")
    wc.add_argument("--out")
    wc.set_defaults(func=cmd_weight_check)

    sim = sub.add_parser("simulate", help="run a scenario file")
    sim.add_argument("scenario")
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)

    vr = sub.add_parser("virial-report", help="virial identity report for a trajectory")
    vr.add_argument("trajectory")
    vr.add_argument("--R", default="auto")
    vr.add_argument("--tol", type=float, default=1e-2)
    vr.add_argument("--out")
    vr.set_defaults(func=cmd_virial_report)

    bs = sub.add_parser("blowup-scan", help="scan scaled-soliton amplitudes")
    bs.add_argument("--lambda-min", type=float, dest="lambda_min", required=True)
    bs.add_argument("--lambda-max", type=float, dest="lambda_max", required=True)
    bs.add_argument("--steps", type=int, required=True)
    bs.add_argument("--T-end", type=float, dest="T_end", default=2.0)
    bs.add_argument("--out")
    bs.set_defaults(func=cmd_blowup_scan)

    gsp = sub.add_parser("ground-state", help="compute a standing-wave profile")
    gsp.add_argument("--model", default="free")
    gsp.add_argument("--gamma", type=float, default=0.0)
    gsp.add_argument("--mu", type=float, default=0.5)
    gsp.add_argument("--omega", type=float, default=1.0)
    gsp.add_argument("--tol", type=float, default=1e-8)
    gsp.add_argument("--out")
    gsp.set_defaults(func=cmd_ground_state)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BADARGS if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
