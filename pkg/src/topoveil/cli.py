"""Experiment runner.

Subcommands:

* ``design``    run one design and write the feedback + verification JSON
* ``run``       full design -> simulate -> attack -> score pipeline
* ``reproduce`` desk-scale analogues of the headline experiments
* ``validate``  parse a scenario and report what it would do

Exit codes: 0 success, 2 configuration error, 3 infeasible design,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adversary import (
    SCORE_CSV_HEADER,
    lag_estimate,
    ols_estimate,
    score,
    score_csv_row,
    subspace_identify,
)
from .design_central import (
    FeedbackMatrix,
    design_invariant_subspace,
    design_kernel_pb,
    design_laplacian,
    design_unobservable,
    feedback_dumps,
)
from .design_dist import modified_matrix, protocol_log_lines, run_protocol
from .dynamics import (
    NoiseConfig,
    build_hankel,
    hankel_shift_pair,
    observe,
    simulate,
    simulate_noisy,
)
from .errors import ConfigError, Infeasible, TopoveilError
from .lincore import left_dominant_vector
from .netgraph import Topology, random_topology
from .scenario import ExperimentScenario, parse_scenario, write_manifest

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""))


# ---------------------------------------------------------------------------
# Design dispatch
# ---------------------------------------------------------------------------


def run_design(scenario: ExperimentScenario, topo: Topology, x0: np.ndarray):
    """Return (FeedbackMatrix | None, protocol result | None) for the
    scenario's method; None feedback means the nominal system (K = 0)."""
    method = scenario.method_name
    if method in ("none", "noise_adjacent", "noise_independent"):
        return None, None
    if method == "laplacian":
        alpha = scenario.method.get("alpha")
        return design_laplacian(topo, alpha=float(alpha) if alpha is not None else None), None
    if method == "kernel_pb":
        return design_kernel_pb(topo, seed=scenario.seed), None
    if method == "invariant_subspace":
        return design_invariant_subspace(topo), None
    if method == "unobservable":
        c = scenario.build_observation_matrix(topo.n)
        return design_unobservable(topo, c), None
    if method == "distributed":
        result = run_protocol(
            topo,
            x0,
            tau=float(scenario.method["tau"]),
            delta=scenario.method.get("delta"),
            seed=scenario.seed,
        )
        return result.feedback, result
    raise ConfigError(f"unhandled method {method!r}")


def _effective_matrix(topo: Topology, feedback: FeedbackMatrix | None, protocol) -> np.ndarray:
    if protocol is not None:
        return modified_matrix(topo, protocol)
    if feedback is not None:
        return topo.w + feedback.k
    return np.array(topo.w)


# ---------------------------------------------------------------------------
# run pipeline
# ---------------------------------------------------------------------------


def _score_cell(scenario, topo, x0, w_eff, k, c, horizon, run_index):
    method = scenario.method_name
    baseline = simulate(topo.w, x0, horizon)
    if method == "noise_adjacent":
        cfg = NoiseConfig(mode="adjacent", seed=scenario.seed, runs=scenario.runs)
        traj = simulate_noisy(topo.w, x0, horizon, cfg, run=run_index)
        est_traj = traj
    elif method == "noise_independent":
        cfg = NoiseConfig(mode="independent", seed=scenario.seed, runs=scenario.runs)
        traj = simulate_noisy(topo.w, x0, horizon, cfg, run=run_index)
        est_traj = traj
    elif method == "distributed":
        # Deviation uses the honest protocol run (nominal updates during
        # the negotiation rounds, modified afterwards); the observer
        # collects once the modified system is in place, so its data is
        # a pure W+K trajectory.
        result = run_protocol(
            topo, x0,
            tau=float(scenario.method["tau"]),
            delta=scenario.method.get("delta"),
            seed=scenario.seed,
            horizon=horizon,
        )
        traj = result.trajectory
        est_traj = simulate(w_eff, x0, horizon)
    else:
        traj = simulate(w_eff, x0, horizon)
        est_traj = traj

    estimator = scenario.estimator
    if estimator == "ols":
        est = ols_estimate(est_traj)
    elif estimator == "lag":
        est = lag_estimate(est_traj)
    else:
        hankel = build_hankel(observe(c, est_traj), topo.n)
        est = subspace_identify(hankel_shift_pair(hankel), topo.n)
    cell = score(est, topo, traj, baseline, k)
    return score_csv_row(scenario.scenario_id, method, horizon, run_index, cell)


def cmd_run(scenario: ExperimentScenario, out_dir: Path, jobs: int) -> int:
    start = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    topo = scenario.build_topology()
    x0 = scenario.build_x0(topo.n)
    c = scenario.build_observation_matrix(topo.n)
    feedback, protocol = run_design(scenario, topo, x0)
    w_eff = _effective_matrix(topo, feedback, protocol)
    k = w_eff - topo.w if feedback is not None else np.zeros((topo.n, topo.n))

    cells = [(t, r) for t in scenario.horizons for r in range(scenario.runs)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                lambda cell: _score_cell(scenario, topo, x0, w_eff, k, c, cell[0], cell[1]),
                cells,
            ))
    else:
        rows = [_score_cell(scenario, topo, x0, w_eff, k, c, t, r) for t, r in cells]
    order = sorted(range(len(cells)), key=lambda i: cells[i])
    rows = [rows[i] for i in order]

    outputs = []
    csv_path = out_dir / "scores.csv"
    _write_csv(csv_path, SCORE_CSV_HEADER, rows)
    outputs.append(csv_path.name)
    if feedback is not None:
        k_path = out_dir / "k.json"
        k_path.write_text(feedback_dumps(feedback) + "\n")
        outputs.append(k_path.name)
    if protocol is not None:
        log_path = out_dir / "protocol_log.jsonl"
        log_path.write_text(protocol_log_lines(protocol))
        outputs.append(log_path.name)

    cell_seeds = {f"T{t}_run{r}": scenario.seed for t, r in cells}
    write_manifest(out_dir, scenario, outputs, cell_seeds, time.perf_counter() - start)
    print(f"wrote {len(rows)} score rows to {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# design command
# ---------------------------------------------------------------------------


def cmd_design(scenario: ExperimentScenario, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    topo = scenario.build_topology()
    x0 = scenario.build_x0(topo.n)
    feedback, protocol = run_design(scenario, topo, x0)
    if feedback is None:
        raise ConfigError(f"method {scenario.method_name!r} produces no feedback matrix")
    (out_dir / "k.json").write_text(feedback_dumps(feedback) + "\n")
    (out_dir / "report.json").write_text(
        json.dumps(feedback.verification.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    if protocol is not None:
        (out_dir / "protocol_log.jsonl").write_text(protocol_log_lines(protocol))
    print(f"method={feedback.method} verification={'pass' if feedback.verification.all_ok else 'FAIL'}")
    return 0


# ---------------------------------------------------------------------------
# validate command
# ---------------------------------------------------------------------------


def cmd_validate(scenario: ExperimentScenario) -> int:
    topo = scenario.build_topology()
    print(f"scenario {scenario.scenario_id}: ok")
    print(f"  network: n={topo.n}, edges={topo.z}")
    print(f"  method: {scenario.method_name}")
    print(f"  observer: {scenario.observer.get('kind', 'full')}, estimator: {scenario.estimator}")
    print(f"  horizons: {list(scenario.horizons)}, runs: {scenario.runs}")
    return 0


# ---------------------------------------------------------------------------
# reproduce command
# ---------------------------------------------------------------------------

SURROGATE_N = 8
SURROGATE_DENSITY = 0.5
SURROGATE_SEED = 1
SURROGATE_X0 = np.array([-2.0, -48.0, -35.0, -50.0, -56.0, 60.0, 0.0, -84.0])
TAU_GRID = (0.0, 0.4, 0.8, 1.2, 1.6, 2.0)


def surrogate_network() -> Topology:
    """Seeded 8-node stand-in for the figure-only paper network."""
    return random_topology(SURROGATE_N, SURROGATE_DENSITY, SURROGATE_SEED)


def _support_rate(w: np.ndarray) -> float:
    """Fraction of nonzero entries; the quantity the budget sweep plots
    (it decreases as more edges are hidden)."""
    return float(np.count_nonzero(w != 0.0) / w.size)


def reproduce_tau_sweep(out_dir: Path, seed: int) -> list[str]:
    topo = surrogate_network()
    pi = topo.pi()
    rows = []
    notes = {"tau_hidden_edges": {}}
    for tau in TAU_GRID:
        if tau == 0.0:
            w_mod = np.array(topo.w)
            k_inf = 0.0
            pi_dev_inf = 0.0
        else:
            result = run_protocol(topo, SURROGATE_X0, tau=tau, seed=seed)
            w_mod = modified_matrix(topo, result)
            k_inf = float(np.max(np.abs(result.k).sum(axis=1)))
            pi_dev_inf = float(np.max(np.abs(pi - left_dominant_vector(w_mod))))
            notes["tau_hidden_edges"][str(tau)] = {
                str(i): sorted(int(j) for j in row.hidden)
                for i, row in enumerate(result.rows)
            }
            notes.setdefault("root", result.root)
        rows.append(",".join([_fmt(tau), _fmt(_support_rate(w_mod)), _fmt(k_inf), _fmt(pi_dev_inf)]))
    _write_csv(out_dir / "tau_sweep.csv", "tau,sparsity_rate,k_inf_norm,pi_dev_inf", rows)
    (out_dir / "tau_sweep_notes.json").write_text(json.dumps(notes, indent=2, sort_keys=True) + "\n")
    return ["tau_sweep.csv", "tau_sweep_notes.json"]


def reproduce_method_compare(out_dir: Path, seed: int) -> list[str]:
    topo = surrogate_network()
    horizon = 400
    baseline = simulate(topo.w, SURROGATE_X0, horizon)

    proto = run_protocol(topo, SURROGATE_X0, tau=2.0, seed=seed, horizon=horizon)
    systems = {
        "m1_kernel_pb": (topo.w + design_kernel_pb(topo, seed=seed).k, None),
        "m2_laplacian": (topo.w + design_laplacian(topo).k, None),
        "proposed": (modified_matrix(topo, proto), proto.trajectory),
    }

    dev_rows = []
    err_rows = []
    for method, (w_eff, dev_traj) in systems.items():
        if dev_traj is None:
            dev_traj = simulate(w_eff, SURROGATE_X0, horizon)
        devs = np.linalg.norm(dev_traj.states - baseline.states, axis=1)
        dev_rows.extend(f"{method},{t},{_fmt(devs[t])}" for t in range(horizon + 1))
        for t_obs in (25, 50, 100, 200, 400):
            est = ols_estimate(simulate(w_eff, SURROGATE_X0, t_obs))
            cell = score(est, topo, dev_traj, baseline, w_eff - topo.w)
            err_rows.append(f"{method},{t_obs},{_fmt(cell.er1)},{_fmt(cell.er2)}")
    _write_csv(out_dir / "method_compare_deviation.csv", "method,t,state_dev", dev_rows)
    _write_csv(out_dir / "method_compare_errors.csv", "method,T,er1,er2", err_rows)
    return ["method_compare_deviation.csv", "method_compare_errors.csv"]


def reproduce_noise_compare(out_dir: Path, seed: int, runs: int) -> list[str]:
    topo = surrogate_network()
    horizons = (100, 1000, 10000)
    rows = []
    for horizon in horizons:
        baseline = simulate(topo.w, SURROGATE_X0, horizon)
        cells = {"m3_adjacent": [], "m4_independent": [], "proposed": []}
        for run in range(runs):
            for method, mode, estimator in (
                ("m3_adjacent", "adjacent", lag_estimate),
                ("m4_independent", "independent", ols_estimate),
            ):
                cfg = NoiseConfig(mode=mode, seed=seed, runs=runs)
                traj = simulate_noisy(topo.w, SURROGATE_X0, horizon, cfg, run=run)
                est = estimator(traj)
                # Noise deviation settles rather than growing; report the
                # endpoint so the decay over T is visible.
                dev = float(np.linalg.norm(traj.states[-1] - baseline.states[-1]))
                er1 = float(np.linalg.norm(est.estimate - topo.w) / np.linalg.norm(topo.w))
                cells[method].append((dev, er1))
        proto = run_protocol(topo, SURROGATE_X0, tau=2.0, seed=seed, horizon=horizon)
        w_proposed = modified_matrix(topo, proto)
        est = ols_estimate(simulate(w_proposed, SURROGATE_X0, horizon))
        dev = float(np.linalg.norm(proto.trajectory.states[-1] - baseline.states[-1]))
        er1 = float(np.linalg.norm(est.estimate - topo.w) / np.linalg.norm(topo.w))
        cells["proposed"].append((dev, er1))
        for method, pairs in cells.items():
            devs = np.mean([p[0] for p in pairs])
            er1s = np.mean([p[1] for p in pairs])
            rows.append(f"{method},{horizon},{_fmt(devs)},{_fmt(er1s)}")
    _write_csv(out_dir / "noise_compare.csv", "method,T,mean_state_dev,mean_er1", rows)
    return ["noise_compare.csv"]


def cmd_reproduce(figure: str, out_dir: Path, seed: int, runs: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    if figure == "tau_sweep":
        outputs = reproduce_tau_sweep(out_dir, seed)
    elif figure == "method_compare":
        outputs = reproduce_method_compare(out_dir, seed)
    elif figure == "noise_compare":
        outputs = reproduce_noise_compare(out_dir, seed, runs)
    else:
        raise ConfigError(f"unknown figure {figure!r}")
    print(f"wrote {', '.join(outputs)} to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoveil", description=__doc__)
    parser.add_argument("--version", action="version", version=f"topoveil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="run one design and write K + verification")
    p_design.add_argument("--scenario", required=True)
    p_design.add_argument("--out", default="out")

    p_run = sub.add_parser("run", help="design, simulate, attack, and score")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--jobs", type=int, default=1)

    p_rep = sub.add_parser("reproduce", help="desk-scale analogues of the headline experiments")
    p_rep.add_argument("figure", choices=["tau_sweep", "method_compare", "noise_compare"])
    p_rep.add_argument("--out", default="out")
    p_rep.add_argument("--seed", type=int, default=9)
    p_rep.add_argument("--runs", type=int, default=20)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "design":
            return cmd_design(parse_scenario(args.scenario), Path(args.out))
        if args.command == "run":
            return cmd_run(parse_scenario(args.scenario), Path(args.out), jobs=max(1, args.jobs))
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, Path(args.out), args.seed, args.runs)
        if args.command == "validate":
            return cmd_validate(parse_scenario(args.scenario))
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TopoveilError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
