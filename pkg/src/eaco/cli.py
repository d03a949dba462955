"""Experiment runner.

    eaco <bench|tsp|path|gait|sweep|compare> [--config FILE] [--seed N]
         [--reps N] [--out DIR] [--algo eaco|aco|ga|sa|pso[,...]]

Configs are INI files.  Sections: [experiment], [problem], [eaco], [aco],
[ga], [sa], [pso], [sweep].  Unknown sections or keys are errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import baselines, gait
from .benchmarks import (
    EnvironmentInfeasibleError,
    build_waypoint_graph,
    discretize,
    get_problem,
    oracle_tsp,
    read_environment,
)
from .benchmarks.gfuncs import BoxProblem
from .engine import EacoParams, fmt6, run
from .model import ConstructionGraph, InvalidInputError, TspProblem, read_graph_file

log = logging.getLogger("eaco")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 2, 3, 4
ALGORITHMS = ("eaco", "aco", "ga", "sa", "pso")
COMMANDS = ("bench", "tsp", "path", "gait", "sweep", "compare")
REPORT_COLUMNS = ("algo", "runs", "successes", "success_rate", "mean_iterations",
                  "median_iterations", "mean_best", "best", "mean_evaluations")

# default sweep grid: (q0, rho, p_crossover, p_mutation)
DEFAULT_GRID = [
    {"q0": 0.2, "rho_local": 0.1, "p_crossover": 0.2, "p_mutation": 0.2},
    {"q0": 0.4, "rho_local": 0.2, "p_crossover": 0.3, "p_mutation": 0.3},
    {"q0": 0.6, "rho_local": 0.3, "p_crossover": 0.4, "p_mutation": 0.4},
    {"q0": 0.8, "rho_local": 0.3, "p_crossover": 0.6, "p_mutation": 0.5},
    {"q0": 0.9, "rho_local": 0.4, "p_crossover": 0.8, "p_mutation": 0.8},
]

EXPERIMENT_KEYS = {"reps": int, "seed": int, "out": str, "algo": str, "max_iterations": int,
                   "target": float}
PROBLEM_KEYS = {"kind": str, "id": str, "file": str, "nodes": int, "levels": int, "anchors": int,
                "gamma": float, "pen": float, "resolution": float, "duration": float,
                "cycle_period": float}
SWEEP_KEYS = {"q0", "rho_local", "p_crossover", "p_mutation", "alpha_exp", "beta_exp", "m_ants",
              "sigma_elite"}


class ConfigError(InvalidInputError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    kind: str = "bench"
    problem: dict = field(default_factory=dict)
    algos: list[str] = field(default_factory=lambda: ["eaco"])
    reps: int = 1
    seed: int = 0
    out: Path = Path("results")
    max_iterations: int = 1000
    target: float | None = None
    overrides: dict[str, dict] = field(default_factory=dict)
    grid: list[dict] = field(default_factory=list)
    source: str = "<defaults>"

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        bad = [a for a in self.algos if a not in ALGORITHMS]
        if bad or not self.algos:
            raise ConfigError(f"unknown algorithm(s) {bad}; choose from {', '.join(ALGORITHMS)}")
        if self.kind not in ("bench", "tsp", "path", "gait"):
            raise ConfigError(f"unknown problem kind {self.kind!r}")
        f = self.problem.get("file")
        if f and not Path(f).exists():
            raise ConfigError(f"problem file {f} does not exist")
        allowed = {"bench": ALGORITHMS, "gait": ALGORITHMS, "tsp": ("eaco", "aco", "sa"),
                   "path": ("eaco", "aco")}[self.kind]
        bad = [a for a in self.algos if a not in allowed]
        if bad:
            raise ConfigError(f"algorithm(s) {bad} do not apply to {self.kind} problems")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _key_lines(path: Path) -> dict[tuple[str, str], int]:
    """Line number of every key, for diagnostics."""
    where, section = {}, None
    for no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            where[(section, "")] = no
        elif section is not None:
            key = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            where[(section, key)] = no
    return where


def _coerce(text: str, kind, where: str):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(f"not a boolean: {text!r}")
            return configparser.ConfigParser.BOOLEAN_STATES[low]
        if text.lower() == "none":
            return None
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _field_types(cls) -> dict[str, type]:
    out = {}
    for f in fields(cls):
        default = f.default
        if isinstance(default, bool):
            out[f.name] = bool
        elif isinstance(default, int):
            out[f.name] = int
        else:
            out[f.name] = float
    return out


SECTION_TYPES = {
    "eaco": _field_types(EacoParams),
    "aco": _field_types(baselines.AcoParams),
    "ga": _field_types(baselines.GaParams),
    "sa": _field_types(baselines.SaParams),
    "pso": _field_types(baselines.PsoParams),
}


def load_config(command: str, path: str | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig(command=command)
    if command in ("bench", "tsp", "path", "gait"):
        cfg.kind = command
    if command == "compare":
        cfg.algos = ["eaco", "ga", "sa"]
    if path is None:
        if command == "sweep":
            cfg.grid = [dict(row) for row in DEFAULT_GRID]
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{path}: no such config file")
    cfg.source = str(p)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(p.read_text(), source=str(p))
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from exc
    lines = _key_lines(p)

    def loc(section, key=""):
        return f"{p}:{lines.get((section, key), lines.get((section, ''), 0))}"

    grid_axes: dict[str, list] = {}
    for section in parser.sections():
        items = parser[section]
        if section == "experiment":
            for key, val in items.items():
                if key not in EXPERIMENT_KEYS:
                    raise ConfigError(f"{loc(section, key)}: unknown key {key!r} in [{section}]")
                v = _coerce(val, EXPERIMENT_KEYS[key], loc(section, key))
                if key == "algo":
                    cfg.algos = [a.strip() for a in v.split(",") if a.strip()]
                elif key == "out":
                    cfg.out = Path(v)
                else:
                    setattr(cfg, key, v)
        elif section == "problem":
            for key, val in items.items():
                if key not in PROBLEM_KEYS:
                    raise ConfigError(f"{loc(section, key)}: unknown key {key!r} in [problem]")
                v = _coerce(val, PROBLEM_KEYS[key], loc(section, key))
                if key == "kind":
                    if command not in ("sweep", "compare") and v != cfg.kind:
                        raise ConfigError(f"{loc(section, key)}: kind {v!r} conflicts with command {command!r}")
                    cfg.kind = v
                elif key == "file":
                    fp = Path(v) if Path(v).is_absolute() else p.parent / v
                    cfg.problem[key] = str(fp)
                else:
                    cfg.problem[key] = v
        elif section in SECTION_TYPES:
            types = SECTION_TYPES[section]
            ov = cfg.overrides.setdefault(section, {})
            for key, val in items.items():
                if key not in types:
                    raise ConfigError(f"{loc(section, key)}: unknown key {key!r} in [{section}]")
                ov[key] = _coerce(val, types[key], loc(section, key))
        elif section == "sweep":
            for key, val in items.items():
                if key not in SWEEP_KEYS:
                    raise ConfigError(f"{loc(section, key)}: unknown sweep axis {key!r}")
                typ = SECTION_TYPES["eaco"][key]
                grid_axes[key] = [_coerce(v, typ, loc(section, key)) for v in val.split(",") if v.strip()]
                if not grid_axes[key]:
                    raise ConfigError(f"{loc(section, key)}: empty sweep axis")
        else:
            raise ConfigError(f"{loc(section)}: unknown section [{section}]")
    if command == "sweep":
        if grid_axes:
            keys = sorted(grid_axes)
            cfg.grid = [dict(zip(keys, combo)) for combo in itertools.product(*(grid_axes[k] for k in keys))]
        else:
            cfg.grid = [dict(row) for row in DEFAULT_GRID]
    return cfg


# ---------------------------------------------------------------------------
# problem and algorithm dispatch
# ---------------------------------------------------------------------------


# colony settings for layered (continuous) problems, where uniform trails
# plus lowest-id tie breaking make a high q0 collapse onto the first level
KIND_EACO_DEFAULTS = {
    "bench": {"q0": 0.5, "m_ants": 40},
    "gait": {"q0": 0.5},
}


def _params(cls, cfg: ExperimentConfig, section: str, extra: dict | None = None):
    kw = dict(KIND_EACO_DEFAULTS.get(cfg.kind, {})) if cls is EacoParams else {}
    kw.update(cfg.overrides.get(section, {}))
    kw.setdefault("max_iterations", cfg.max_iterations)
    target_key = "target_objective" if cls is EacoParams else "target"
    kw.setdefault(target_key, cfg.target)
    kw.update(extra or {})
    return cls(**kw)


def default_target(cfg: ExperimentConfig) -> float | None:
    if cfg.target is not None:
        return cfg.target
    if cfg.kind == "bench" and str(cfg.problem.get("id", "g1")).lower() in ("g1", "1"):
        return -14.0
    return None


def _tsp_graph(cfg: ExperimentConfig) -> ConstructionGraph:
    if "file" in cfg.problem:
        return read_graph_file(cfg.problem["file"])
    n = int(cfg.problem.get("nodes", 8))
    if n < 2:
        raise ConfigError("nodes must be >= 2")
    rng = np.random.default_rng(cfg.seed)
    return ConstructionGraph.from_coords(rng.uniform(0, 100, size=(n, 2)))


def _gait_settings(cfg):
    return dict(duration=float(cfg.problem.get("duration", 20.0)),
                cycle_period=float(cfg.problem.get("cycle_period", 1.0)))


def run_one(cfg: ExperimentConfig, algo: str, seed: int, eaco_extra: dict | None = None):
    """One seeded run; returns (Solution, ConvergenceRecord, extras)."""
    kind, pr = cfg.kind, cfg.problem
    extras: dict = {}
    if kind == "bench":
        prob = get_problem(pr.get("id", "g1"))
        pen = float(pr.get("pen", 0.3))
        if algo in ("eaco", "aco"):
            layered = discretize(prob, pen=pen, levels=int(pr.get("levels", 7)),
                                 anchors=int(pr.get("anchors", 7)), gamma=float(pr.get("gamma", 0.7)))
            if algo == "eaco":
                return (*run(layered, _params(EacoParams, cfg, "eaco", {"seed": seed, **(eaco_extra or {})})), extras)
            return (*baselines.run_standard_aco(layered, _params(baselines.AcoParams, cfg, "aco"), seed), extras)
        target = prob
    elif kind == "tsp":
        graph = _tsp_graph(cfg)
        problem = TspProblem(graph)
        if graph.n <= 10:
            extras["oracle"] = oracle_tsp(graph).cost
        if algo == "eaco":
            return (*run(problem, _params(EacoParams, cfg, "eaco", {"seed": seed, **(eaco_extra or {})})), extras)
        if algo == "aco":
            return (*baselines.run_standard_aco(problem, _params(baselines.AcoParams, cfg, "aco"), seed), extras)
        return (*baselines.run_simulated_annealing(problem, _params(baselines.SaParams, cfg, "sa"), seed), extras)
    elif kind == "path":
        if "file" not in pr:
            raise ConfigError("path problems need [problem] file = <environment file>")
        env = read_environment(pr["file"])
        wg, problem = build_waypoint_graph(env, float(pr.get("resolution", 1.0)))
        from .benchmarks import oracle_shortest_path
        extras["oracle"] = oracle_shortest_path(wg).cost
        if algo == "eaco":
            sol, rec = run(problem, _params(EacoParams, cfg, "eaco", {"seed": seed, **(eaco_extra or {})}))
        else:
            sol, rec = baselines.run_standard_aco(problem, _params(baselines.AcoParams, cfg, "aco"), seed)
        extras["collision_free"] = problem.is_collision_free(sol, env)
        return sol, rec, extras
    else:  # gait
        gs = _gait_settings(cfg)
        model = gait.WalkerModel()
        if algo in ("eaco", "aco"):
            gp = gait.gait_problem(model=model, **gs)
            if algo == "eaco":
                sol, rec = run(gp, _params(EacoParams, cfg, "eaco", {"seed": seed, **(eaco_extra or {})}))
            else:
                sol, rec = baselines.run_standard_aco(gp, _params(baselines.AcoParams, cfg, "aco"), seed)
            x = gp.decode_solution(sol)
        else:
            lo, hi = gait.default_bounds(model)
            target = BoxProblem("gait", lo, hi, lambda v: -gait.evaluate_vector(v, model, **gs))
            sol, rec = _continuous(cfg, algo, target, seed)
            x = sol.x
        extras["gait_x"] = np.asarray(x, dtype=float)
        return sol, rec, extras
    return (*_continuous(cfg, algo, target, seed), extras)


def _continuous(cfg, algo, target, seed):
    pen = float(cfg.problem.get("pen", 0.3))
    if algo == "ga":
        return baselines.run_real_coded_ga(target, _params(baselines.GaParams, cfg, "ga"), seed, pen)
    if algo == "sa":
        return baselines.run_simulated_annealing(target, _params(baselines.SaParams, cfg, "sa"), seed, pen)
    if algo == "pso":
        return baselines.run_pso(target, _params(baselines.PsoParams, cfg, "pso"), seed, pen)
    raise ConfigError(f"algorithm {algo!r} does not apply here")


# ---------------------------------------------------------------------------
# experiments and reports
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return fmt6(v)


def run_experiment(cfg: ExperimentConfig, out: Path | None = None, eaco_extra: dict | None = None) -> list[dict]:
    """Run every algorithm for ``reps`` seeds; write per-run CSVs, summary
    JSON and the report CSV.  Returns the report rows."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    target = default_target(cfg)
    rows, summary = [], {"config": cfg.source, "kind": cfg.kind, "target": target, "runs": []}
    for algo in cfg.algos:
        iters, censored, bests, evals, ok = [], [], [], [], 0
        has_threshold = False
        for r in range(cfg.reps):
            seed = cfg.seed + r
            t0 = time.perf_counter()
            sol, rec, extras = run_one(cfg, algo, seed, eaco_extra)
            wall = time.perf_counter() - t0
            csv_path = out / f"run_{algo}_{seed}.csv"
            rec.to_csv(csv_path)
            thr = target
            if thr is None and "oracle" in extras:
                thr = extras["oracle"] * (1 + 1e-9)
            has_threshold = thr is not None
            it = rec.iterations_to(thr) if thr is not None else None
            if thr is None:
                success = True
            else:
                success = it is not None
            if "collision_free" in extras:
                success = success and extras["collision_free"]
            ok += success
            if it is not None:
                iters.append(it)
            censored.append(math.inf if it is None else it)
            bests.append(sol.objective)
            evals.append(rec.evaluations)
            entry = {"algo": algo, "seed": seed, "csv": csv_path.name, "best": sol.objective,
                     "iterations": len(rec.rows), "iterations_to_target": it, "success": bool(success),
                     "evaluations": rec.evaluations, "wall_time": wall}
            entry.update({k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in extras.items()})
            summary["runs"].append(entry)
            if cfg.kind == "gait":
                gp = gait.GaitParams.from_vector(extras["gait_x"], float(cfg.problem.get("cycle_period", 1.0)))
                gait.export_joint_csv(gp, out / f"gait_{algo}_{seed}.csv")
                gait.export_summary(gp, gait.simulate_walk(gp, duration=float(cfg.problem.get("duration", 20.0))),
                                    out / f"gait_{algo}_{seed}.json")
        rows.append({
            "algo": algo, "runs": cfg.reps, "successes": ok, "success_rate": ok / cfg.reps,
            "mean_iterations": float(np.mean(iters)) if iters else None,
            # unreached runs count as +inf, so a median over failures reads inf
            "median_iterations": float(np.median(censored)) if has_threshold else None,
            "mean_best": float(np.mean(bests)), "best": float(np.min(bests)),
            "mean_evaluations": float(np.mean(evals)),
        })
    write_report(out / "report.csv", rows)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    missing = [e["csv"] for e in summary["runs"] if not (out / e["csv"]).exists()]
    if missing:
        raise RuntimeError(f"missing run files: {missing}")
    return rows


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o))


def write_report(path: Path, rows: list[dict], columns=REPORT_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([row[c] if isinstance(row[c], str) else _fmt(row[c]) for c in columns])


def _sort_key(row):
    m = row["mean_iterations"]
    return (m is None or (isinstance(m, float) and math.isnan(m)), m if m is not None else 0.0)


def parameter_sweep(cfg: ExperimentConfig, grid: list[dict] | None = None) -> list[dict]:
    """One experiment per grid cell; sweep.csv is sorted by mean iterations."""
    grid = cfg.grid if grid is None else grid
    if not grid:
        raise ConfigError("sweep grid is empty")
    known = {f.name for f in fields(EacoParams)}
    axes = sorted({k for cell in grid for k in cell})
    bad = [k for k in axes if k not in known]
    if bad:
        raise ConfigError(f"unknown sweep parameter(s) {bad}")
    cfg = ExperimentConfig(**{**cfg.__dict__, "algos": ["eaco"]})
    out = Path(cfg.out)
    rows = []
    for k, cell in enumerate(grid):
        base = dict(cfg.overrides.get("eaco", {}))
        base.update(cell)
        # rates in the grid are fixed settings, so self-adaptation is off
        if "p_crossover" in cell or "p_mutation" in cell:
            base.setdefault("self_adaptive", False)
        sub = ExperimentConfig(**{**cfg.__dict__, "overrides": {**cfg.overrides, "eaco": base}})
        report = run_experiment(sub, out / f"cell_{k}")
        row = {"cell": k, **{a: cell.get(a) for a in axes}, **report[0]}
        rows.append(row)
    rows.sort(key=_sort_key)
    cols = ("cell", *axes) + REPORT_COLUMNS[1:]
    write_report(out / "sweep.csv", rows, cols)
    return rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eaco", description="Enhanced ant colony experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI experiment file")
        sp.add_argument("--seed", type=int, help="seed of the first repetition")
        sp.add_argument("--reps", type=int, help="number of repetitions")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--algo", help="algorithm or comma list: " + "|".join(ALGORITHMS))
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.reps is not None:
            cfg.reps = args.reps
        if args.out is not None:
            cfg.out = Path(args.out)
        if args.algo is not None:
            cfg.algos = [a.strip() for a in args.algo.split(",") if a.strip()]
        cfg.validate()
        for section, ov in cfg.overrides.items():
            if section == "eaco":
                EacoParams(**ov)
            else:
                getattr(baselines, {"aco": "AcoParams", "ga": "GaParams", "sa": "SaParams",
                                    "pso": "PsoParams"}[section])(**ov)
    except (InvalidInputError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "sweep":
            rows = parameter_sweep(cfg)
            print(f"wrote {cfg.out / 'sweep.csv'} ({len(rows)} cells)")
        else:
            rows = run_experiment(cfg)
            for row in rows:
                print(f"{row['algo']}: success {row['successes']}/{row['runs']}, "
                      f"mean best {fmt6(row['mean_best'])}")
            print(f"wrote {cfg.out / 'report.csv'}")
    except EnvironmentInfeasibleError as exc:
        print(f"infeasible problem: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any run failure maps to one exit code
        log.debug("run failed", exc_info=True)
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
