"""Command-line front end.

Every subcommand writes its CSV/JSON outputs and a ``manifest.json`` into
``--out``. Exit codes: 0 success, 2 input error, 3 model precondition
violated (unstable law, degenerate stationary headway).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .csvout import write_rows
from .eulerian_dual import (DualError, DualInstance, car_budget, counts_from_times, run_counts,
                            run_times)
from .open_dynamics import (DegenerateHeadwayError, LeadProfile, OpenState, ProfileError,
                            default_profile, eigen_solution_open, hysteresis_series, loop_gap,
                            open_residual, ordering_violations, platoon, simulate_open,
                            stationary_headway)
from .pwl_law import (LawError, PwlLaw, check_connected, check_stability, fit_concave, fit_report,
                      jam_headway, table_law)
from .ring_dynamics import (RingConfig, growth_rate, simulate_ring, uniform_state,
                            write_trajectory_csv)
from .stationary import (StabilityError, diagram_table, eigen_residual, eigen_solution_ring,
                         speed_diagram)

log = logging.getLogger("pwlcf")

EXIT_INPUT = 2
EXIT_MODEL = 3


class InputError(Exception):
    pass


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_law(path) -> PwlLaw:
    return PwlLaw.from_dict(_read_json(path))


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            count = int(round((stop - start) / step)) + 1
            return [round(start + k * step, 12) for k in range(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InputError(f"bad grid {text!r}") from exc


def _read_samples(path) -> list[tuple[float, float]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        samples = [(float(r["y"]), float(r["v"])) for r in rows]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise InputError(f"cannot read samples {path}: {exc}") from exc
    if len(samples) < 2:
        raise InputError(f"need at least 2 samples, got {len(samples)}")
    return samples


def cmd_fit(args, out: Path) -> dict:
    samples = _read_samples(args.samples)
    law = fit_concave(samples, args.pieces)
    report = fit_report(law, samples)
    ys = np.array([s[0] for s in samples])
    report["jam_headway"] = jam_headway(law, float(ys.max()), float(ys.min()))
    files = [
        _write_json(out / "law.json", law.to_dict()),
        _write_json(out / "fit_report.json", report),
    ]
    log.info("fit %d pieces, sup error %.6g", report["pieces"], report["sup_error"])
    return {"config": {"samples": str(args.samples), "pieces": args.pieces}, "outputs": files,
            "summary": report}


def cmd_diagram(args, out: Path) -> dict:
    law = _read_law(args.law)
    densities = _parse_grid(args.rho)
    nu, horizon = (args.empirical or (None, None))
    seed = 0 if args.seed is None else args.seed
    rows = diagram_table(law, densities, nu, horizon, args.noise, seed)
    header = ["rho", "q_model"] + (["q_empirical"] if nu is not None else [])
    files = [write_rows(out / "diagram.csv", header, rows)]
    if args.headways:
        pts = speed_diagram(law, _parse_grid(args.headways))
        files.append(write_rows(out / "speed_diagram.csv", ["y_bar", "v_bar", "rho_bar", "q_bar"],
                                [(p.y_bar, p.v_bar, p.rho_bar, p.q_bar) for p in pts]))
    config = {"law": law.to_dict(), "rho": densities, "empirical": args.empirical,
              "noise": args.noise, "headways": args.headways}
    return {"config": config, "seed": seed, "outputs": files}


def _ring_scenario(doc: dict, seed_override):
    try:
        law = PwlLaw.from_dict(doc["law"])
        config = RingConfig(int(doc["nu"]), float(doc["mu"]))
        horizon = int(doc["horizon"])
        noise = float(doc.get("noise", 0.0))
        seed = int(doc.get("seed", 0)) if seed_override is None else seed_override
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed ring scenario: {exc}") from exc
    if horizon < 0:
        raise InputError("horizon must be >= 0")
    return law, config, horizon, noise, seed


def cmd_ring(args, out: Path) -> dict:
    law, config, horizon, noise, seed = _ring_scenario(_read_json(args.scenario), args.seed)
    traj = simulate_ring(uniform_state(config, noise, seed), law, config, horizon)
    files = [
        write_trajectory_csv(out / "trajectory.csv", traj),
        write_trajectory_csv(out / "headways.csv", traj, mu=config.mu),
    ]
    summary = {"stable": check_stability(law), "connected": check_connected(law)}
    if horizon >= 1:
        g = growth_rate(traj)
        files.append(write_rows(out / "growth.csv", ["n", "growth_rate"],
                                [(n + 1, v) for n, v in enumerate(g)]))
        summary["mean_growth_rate"] = float(np.mean(g))
    if summary["stable"]:
        pair = eigen_solution_ring(law, config)
        summary["v_bar"] = pair.v_bar
        summary["eigen_residual"] = eigen_residual(law, config, pair)
    log.info("ring nu=%d mu=%g T=%d: %s", config.nu, config.mu, horizon, summary)
    resolved = {"law": law.to_dict(), "nu": config.nu, "mu": config.mu, "horizon": horizon,
                "noise": noise, "seed": seed}
    return {"config": resolved, "seed": seed, "outputs": files, "summary": summary}


DEFAULT_OPEN = {
    "nu": 50,
    "initial_headway_m": 20.0,
    "horizon": 7200,
    "seed": 0,
}


def default_open_scenario() -> dict:
    return {"law": table_law().to_dict(), "profile": default_profile().to_list(), **DEFAULT_OPEN}


def cmd_open(args, out: Path) -> dict:
    doc = _read_json(args.scenario) if args.scenario else default_open_scenario()
    try:
        law = PwlLaw.from_dict(doc["law"])
        profile = LeadProfile(tuple(doc["profile"]))
        nu = int(doc["nu"])
        headway = float(doc["initial_headway_m"])
        horizon = int(doc.get("horizon", profile.end))
        noise = float(doc.get("initial_noise_m", 0.0))
        seed = int(doc.get("seed", 0)) if args.seed is None else args.seed
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed open scenario: {exc}") from exc
    if nu < 2:
        raise InputError("open scenario needs at least two cars")

    state0 = platoon(nu, headway)
    if noise:
        rng = np.random.default_rng(seed)
        state0 = OpenState(state0.positions + rng.uniform(-noise, noise, nu), 0)
    traj = simulate_open(state0, law, profile, horizon)
    series = hysteresis_series(traj, profile)
    files = [
        write_trajectory_csv(out / "trajectory.csv", traj),
        write_rows(out / "hysteresis.csv", ["t", "v1", "mean_headway"], series),
    ]
    v_last = series[-1][1]
    summary = {
        "final_mean_headway": series[-1][2],
        "loop_gap": loop_gap(series, profile),
        "ordering_violations": ordering_violations(traj),
        "stationary_headway_at_final_v1": str(stationary_headway(law, v_last)),
    }
    resolved = {"law": law.to_dict(), "profile": profile.to_list(), "nu": nu,
                "initial_headway_m": headway, "horizon": horizon, "seed": seed,
                "initial_noise_m": noise}
    files.append(_write_json(out / "scenario.json", resolved))
    if summary["ordering_violations"]:
        log.warning("car ordering violated in %d states", summary["ordering_violations"])
    return {"config": resolved, "seed": seed, "outputs": files, "summary": summary}


def cmd_eigen(args, out: Path) -> dict:
    law = _read_law(args.law)
    if args.v1 is not None:
        pair = eigen_solution_open(law, args.v1, args.nu)
        residual = open_residual(law, args.v1, pair)
        config = {"law": law.to_dict(), "nu": args.nu, "v1": args.v1, "road": "open"}
    else:
        if args.mu is None:
            raise InputError("eigen needs --mu (ring) or --v1 (open road)")
        ring = RingConfig(args.nu, args.mu)
        pair = eigen_solution_ring(law, ring)
        residual = eigen_residual(law, ring, pair)
        config = {"law": law.to_dict(), "nu": args.nu, "mu": args.mu, "road": "ring"}
    doc = {"v_bar": pair.v_bar, "x": [float(v) for v in pair.x], "residual": residual}
    files = [_write_json(out / "eigen.json", doc)]
    if not args.quiet:
        print(f"v_bar={pair.v_bar:.12g} residual={residual:.3g}")
    return {"config": config, "outputs": files, "summary": doc}


def cmd_dual(args, out: Path) -> dict:
    inst = DualInstance.from_dict(_read_json(args.instance))
    counts = run_counts(inst.grid, inst.arrivals, inst.horizon).as_array()
    tf = run_times(inst.grid, inst.arrivals, car_budget(inst.grid, inst.arrivals))
    K = inst.grid.K
    files = [write_rows(out / "counts.csv", ["t", "x", "n"],
                        ((t, x, int(counts[t, x])) for t in range(inst.horizon + 1)
                         for x in range(K + 1)))]
    files.append(write_rows(out / "times.csv", ["n", "x", "t"],
                            ((n + 1, x, row[x]) for n, row in enumerate(tf.times)
                             for x in range(K + 1))))
    if tf.times:
        discrepancy = int(np.max(np.abs(counts - counts_from_times(tf, inst.horizon))))
    else:
        discrepancy = int(np.max(np.abs(counts)))
    report = {"max_discrepancy": discrepancy, "cars_tracked": len(tf.times),
              "horizon": inst.horizon, "segments": K}
    files.append(_write_json(out / "duality.json", report))
    return {"config": inst.to_dict(), "outputs": files, "summary": report}


COMMANDS = {
    "fit": cmd_fit,
    "diagram": cmd_diagram,
    "ring": cmd_ring,
    "open": cmd_open,
    "eigen": cmd_eigen,
    "dual": cmd_dual,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override scenario seed")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="pwlcf", parents=[common],
                                description="Piecewise-linear car-following simulations")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fit", parents=[common], help="fit a concave law to y,v samples")
    s.add_argument("samples", type=Path)
    s.add_argument("--pieces", type=int, default=6)

    s = sub.add_parser("diagram", parents=[common], help="flow-density diagram of a law")
    s.add_argument("law", type=Path)
    s.add_argument("--rho", default="0.05:0.45:0.05", help="start:stop:step or comma list")
    s.add_argument("--empirical", nargs=2, type=int, metavar=("NU", "T"),
                   help="also simulate a ring with NU cars for T steps per density")
    s.add_argument("--noise", type=float, default=0.0, help="initial position jitter for --empirical")
    s.add_argument("--headways", help="also write the speed diagram on this headway grid")

    s = sub.add_parser("ring", parents=[common], help="simulate a ring road scenario")
    s.add_argument("scenario", type=Path)

    s = sub.add_parser("open", parents=[common], help="simulate an open road scenario")
    s.add_argument("scenario", type=Path, nargs="?", help="defaults to the six-segment example")

    s = sub.add_parser("eigen", parents=[common], help="stationary regime of a law")
    s.add_argument("law", type=Path)
    s.add_argument("--nu", type=int, required=True)
    s.add_argument("--mu", type=float)
    s.add_argument("--v1", type=float)

    s = sub.add_parser("dual", parents=[common], help="run the count and passage-time duals")
    s.add_argument("instance", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.out = getattr(args, "out", Path("out"))
    args.seed = getattr(args, "seed", None)
    args.quiet = getattr(args, "quiet", False)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](args, args.out)
    except (StabilityError, DegenerateHeadwayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InputError, LawError, ProfileError, DualError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    outputs = [Path(f) for f in result["outputs"]]
    manifest = {
        "subcommand": args.command,
        "config": result["config"],
        "seed": result.get("seed", args.seed if args.seed is not None else 0),
        "version": __version__,
        "outputs": [f.name for f in outputs],
    }
    if "summary" in result:
        manifest["summary"] = result["summary"]
    _write_json(args.out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
