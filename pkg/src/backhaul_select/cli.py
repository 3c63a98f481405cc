"""Command-line harness: scenario files, training, sweeps, baselines, plot data.

Every artifact is a pure function of the config and the seeds, so runs
can be diffed byte for byte.  Reports carry no timestamps or host data.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .agent import AgentConfig, evaluate, run_training
from .baselines import random_policy_reward, split_optimum
from .env import BackhaulEnv, ConfigurationError
from .neural import load_checkpoint, save_checkpoint
from .scenario import Scenario, build_scenario
from .traffic import SCENARIOS, split_dataset

log = logging.getLogger("backhaul_select")

REPORT, REWARDS, CHECKPOINT, STEPS = "report.json", "rewards.csv", "checkpoint.json", "steps.csv"
BASELINE, SWEEP = "baseline.json", "sweep.csv"
REWARD_COLS = ["episode", "reward", "moving_avg", "epsilon", "loss_mean"]
STEP_COLS = ["episode", "step", "t", "sid", "action", "reward", "failure_cause",
             "dl_latency_ms", "ul_latency_ms"]
SWEEP_COLS = ["layers", "neurons", "params", "episodes", "last_reward", "avg_reward",
              "validation", "test", "selected"]
DNC = "DNC"
DASH = "----"


@dataclass
class SweepGrid:
    layers: list[int] = field(default_factory=lambda: [1, 3, 5])
    neurons: list[int] = field(default_factory=lambda: [8, 16, 24, 32, 40, 48, 56, 64, 80,
                                                        128, 256])

    def __post_init__(self):
        if not self.layers or not self.neurons:
            raise ConfigurationError("sweep grid must be non-empty")
        if min(self.layers) < 1 or min(self.neurons) < 1:
            raise ConfigurationError("sweep grid entries must be positive")

    def cells(self):
        return [(l, n) for l in self.layers for n in self.neurons]


@dataclass
class RunConfig:
    scenario: str = "with_satellite_4slices"
    scenario_dir: str | None = None
    scenario_seed: int = 0
    split_seed: int = 0
    agent: AgentConfig = field(default_factory=AgentConfig)
    threshold: float = 0.97
    episode_cap: int = 500
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str = "runs"
    random_runs: int = 100
    step_trace: bool = False
    jobs: int = 1
    grid: SweepGrid = field(default_factory=SweepGrid)

    def validate(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigurationError("threshold must be in (0, 1]")
        if self.episode_cap < 1:
            raise ConfigurationError("episode_cap must be >= 1")
        if not self.seeds:
            raise ConfigurationError("need at least one seed")
        if self.random_runs < 1 or self.jobs < 1:
            raise ConfigurationError("random_runs and jobs must be >= 1")
        if self.scenario_dir is not None:
            if not Path(self.scenario_dir).is_dir():
                raise ConfigurationError(f"scenario directory {self.scenario_dir} not found")
        elif self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "agent" in d:
                d["agent"] = AgentConfig(**d["agent"])
            if "grid" in d:
                d["grid"] = SweepGrid(**d["grid"])
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad config: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["agent"] = self.agent.to_dict()
        return d


def load_config(args) -> RunConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(doc)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.out is not None:
        cfg.out = args.out
    if args.episode_cap is not None:
        cfg.episode_cap = args.episode_cap
    for name in ("scenario", "scenario_dir", "threshold", "jobs"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


def make_env(cfg: RunConfig) -> BackhaulEnv:
    if cfg.scenario_dir is not None:
        scenario = Scenario.load(cfg.scenario_dir)
    else:
        scenario = build_scenario(cfg.scenario, cfg.scenario_seed)
    return BackhaulEnv(scenario, split_dataset(cfg.split_seed, scenario.n_intervals))


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# -- train -------------------------------------------------------------------

def train_one(cfg: RunConfig, seed: int, out_dir: Path, env: BackhaulEnv | None = None,
              optimum: int | None = None) -> dict:
    """Train one agent, evaluate it greedily, and write its artifacts."""
    env = env or make_env(cfg)
    agent_cfg = AgentConfig(**{**cfg.agent.to_dict(), "seed": seed})
    steps = [] if cfg.step_trace else None
    result = run_training(env, agent_cfg, cfg.threshold, cfg.episode_cap, optimum=optimum,
                          steps=steps)
    validation = evaluate(result.net, env, "validation").total
    test = evaluate(result.net, env, "test").total
    rewards = result.rewards
    # the output location is left out so reruns elsewhere compare equal
    run_cfg = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    report = {
        "config": {**run_cfg, "seeds": [seed]},
        "scenario": env.scenario.name,
        "slices": [asdict(s) for s in env.scenario.slices],
        "converged": result.converged,
        "episodes": result.episodes if result.converged else None,
        "episodes_run": result.episodes,
        "train_optimum": result.optimum,
        "target_reward": result.target_reward,
        "last_reward": rewards[-1],
        "avg_reward": result.trace[-1].moving_avg,
        "validation_reward": validation,
        "test_reward": test,
        "n_params": result.net.n_params,
        "episode_length": len(env.split.train) * env.n_slices,
        "trace": [
            {"episode": e.episode, "reward": e.reward, "failures": e.failures,
             "failures_by_slice": {str(k): v for k, v in e.failures_by_slice.items()},
             "actions": {str(k): v for k, v in e.actions.items()}}
            for e in result.trace
        ],
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / REPORT).write_text(json.dumps(report, indent=2) + "\n")
    _write_csv(out_dir / REWARDS, REWARD_COLS,
               [(e.episode, e.reward, repr(e.moving_avg), repr(e.epsilon), _fmt(e.loss_mean))
                for e in result.trace])
    save_checkpoint(out_dir / CHECKPOINT, result.net, result.agent.adam,
                    {"seed": seed, "layer_sizes": agent_cfg.layer_sizes})
    if steps is not None:
        _write_csv(out_dir / STEPS, STEP_COLS,
                   [(ep, r.step, r.t, r.sid, r.action, r.reward, r.failure_cause,
                     repr(r.dl_latency_ms), repr(r.ul_latency_ms)) for ep, r in steps])
    status = f"converged in {result.episodes} episodes" if result.converged else DNC
    log.info("seed %d: %s, validation %d, test %d", seed, status, validation, test)
    return report


def _seed_dirs(cfg: RunConfig) -> list[tuple[int, Path]]:
    out = Path(cfg.out)
    if len(cfg.seeds) == 1:
        return [(cfg.seeds[0], out)]
    return [(s, out / f"seed-{s}") for s in cfg.seeds]


def cmd_train(cfg: RunConfig) -> list[dict]:
    env = make_env(cfg)
    optimum = env.max_episode_reward("train")
    reports = [train_one(cfg, seed, d, env, optimum) for seed, d in _seed_dirs(cfg)]
    for r in reports:
        print(f"seed {r['config']['seeds'][0]}: "
              f"{'episodes ' + str(r['episodes']) if r['converged'] else DNC}  "
              f"last {r['last_reward']}  validation {r['validation_reward']}  "
              f"test {r['test_reward']}  (train optimum {r['train_optimum']})")
    return reports


def verify_report(run_dir) -> bool:
    """Re-evaluate a saved checkpoint and compare with the stored rewards."""
    run_dir = Path(run_dir)
    report = json.loads((run_dir / REPORT).read_text())
    cfg = RunConfig.from_dict(report["config"])
    env = make_env(cfg)
    net, _ = load_checkpoint(run_dir / CHECKPOINT)
    return (evaluate(net, env, "validation").total == report["validation_reward"]
            and evaluate(net, env, "test").total == report["test_reward"])


# -- sweep -------------------------------------------------------------------

def _sweep_cell(args):
    cfg, layers, neurons, seed = args
    cell = RunConfig.from_dict(cfg.to_dict())
    cell.agent.hidden = tuple([neurons] * layers)
    out = Path(cfg.out) / f"L{layers}-N{neurons}"
    r = train_one(cell, seed, out)
    return {"layers": layers, "neurons": neurons, "params": r["n_params"],
            "converged": r["converged"], "episodes": r["episodes"],
            "last_reward": r["last_reward"], "avg_reward": r["avg_reward"],
            "validation": r["validation_reward"], "test": r["test_reward"]}


def select_model(rows: list[dict]) -> int | None:
    """Index of the selected cell among converged rows.

    Maximal validation reward, then maximal test reward, then fewest
    parameters, then fewest training episodes.
    """
    candidates = [i for i, r in enumerate(rows) if r["converged"]]
    if not candidates:
        return None
    return min(candidates, key=lambda i: (-rows[i]["validation"], -rows[i]["test"],
                                          rows[i]["params"], rows[i]["episodes"]))


def sweep_table(rows: list[dict]) -> list[list]:
    chosen = select_model(rows)
    table = []
    for i, r in enumerate(rows):
        if r["converged"]:
            cells = [r["episodes"], r["last_reward"], repr(r["avg_reward"]),
                     r["validation"], r["test"]]
        else:
            cells = [DNC, DASH, DASH, DASH, DASH]
        table.append([r["layers"], r["neurons"], r["params"], *cells, int(i == chosen)])
    return table


def cmd_sweep(cfg: RunConfig) -> list[dict]:
    seed = cfg.seeds[0]
    jobs = [(cfg, l, n, seed) for l, n in cfg.grid.cells()]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    table = sweep_table(rows)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    _write_csv(Path(cfg.out) / SWEEP, SWEEP_COLS, table)
    for line in [SWEEP_COLS, *table]:
        print(" ".join(f"{str(c):>11}" for c in line))
    return rows


# -- baseline ----------------------------------------------------------------

def baseline_report(cfg: RunConfig) -> dict:
    env = make_env(cfg)
    doc = {"scenario": env.scenario.name, "random_runs": cfg.random_runs, "splits": {}}
    for part in ("train", "validation", "test"):
        oracle = split_optimum(env.scenario, env.split.part(part), env.packet_bits)
        rnd = random_policy_reward(env, part, cfg.random_runs, rng_seed=cfg.seeds[0])
        doc["splits"][part] = {
            "episode_length": len(env.split.part(part)) * env.n_slices,
            "oracle_total": oracle.total,
            "infeasible": [list(p) for p in oracle.infeasible],
            "oracle": oracle.to_dict(),
            "random_mean": rnd.mean,
            "random_std": rnd.std,
            "random_rewards": rnd.rewards,
        }
    return doc


def cmd_baseline(cfg: RunConfig) -> dict:
    doc = baseline_report(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / BASELINE).write_text(json.dumps(doc, indent=2) + "\n")
    for part, s in doc["splits"].items():
        print(f"{part:>10}: oracle {s['oracle_total']}/{s['episode_length']}  "
              f"random {s['random_mean']:.2f} +- {s['random_std']:.2f}  "
              f"infeasible {len(s['infeasible'])}")
    return doc


# -- plotdata ----------------------------------------------------------------

def cmd_plotdata(run_dir, baseline=None) -> tuple[Path, Path]:
    run_dir = Path(run_dir)
    baseline = Path(baseline) if baseline else run_dir / BASELINE
    missing = [p for p in (run_dir / REPORT, baseline) if not p.is_file()]
    if missing:
        raise FileNotFoundError("missing artifacts: " + ", ".join(map(str, missing))
                                + " (run `train` and `baseline` first)")
    report = json.loads((run_dir / REPORT).read_text())
    base = json.loads(baseline.read_text())["splits"]["train"]
    rewards_path = run_dir / "plot_rewards.csv"
    failures_path = run_dir / "plot_failures.csv"
    moving = []
    rows = []
    for e in report["trace"]:
        moving.append(e["reward"])
        avg = sum(moving[-10:]) / len(moving[-10:])
        rows.append((e["episode"], e["reward"], repr(avg), base["oracle_total"],
                     repr(base["random_mean"])))
    _write_csv(rewards_path, ["episode", "reward", "moving_avg", "oracle", "random_mean"], rows)
    sids = sorted(report["trace"][0]["failures_by_slice"], key=int) if report["trace"] else []
    causes = ["throughput", "latency"]
    _write_csv(failures_path, ["episode", *causes, *[f"sid{s}" for s in sids]],
               [(e["episode"], *[e["failures"][c] for c in causes],
                 *[e["failures_by_slice"][s] for s in sids]) for e in report["trace"]])
    return rewards_path, failures_path


# -- gen-profiles ------------------------------------------------------------

def cmd_gen_profiles(scenario: str, seed: int, out) -> Path:
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {scenario!r}")
    return build_scenario(scenario, seed).save(out)


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="agent seed (overrides config seeds)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--episode-cap", type=int, dest="episode_cap")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="backhaul-select", parents=[common],
                                description="DDQN backhaul link selection simulator")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-profiles", parents=[common], help="write a scenario directory")
    g.add_argument("--scenario", choices=sorted(SCENARIOS), default="with_satellite_4slices")

    for name, text in (("train", "train and evaluate an agent"),
                       ("sweep", "train every critic shape in a grid"),
                       ("baseline", "oracle optimum and random-policy reference")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--scenario", choices=sorted(SCENARIOS))
        s.add_argument("--scenario-dir", dest="scenario_dir")
        if name != "baseline":
            s.add_argument("--threshold", type=float)
        if name == "sweep":
            s.add_argument("--jobs", type=int)

    d = sub.add_parser("plotdata", parents=[common], help="tidy CSVs for external plotting")
    d.add_argument("run_dir")
    d.add_argument("--baseline", help="baseline.json (default: RUN_DIR/baseline.json)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "gen-profiles":
            path = cmd_gen_profiles(args.scenario, args.seed or 0, args.out or "scenario")
            print(f"wrote {path}")
        elif args.command == "plotdata":
            for path in cmd_plotdata(args.run_dir, args.baseline):
                print(f"wrote {path}")
        else:
            cfg = load_config(args)
            {"train": cmd_train, "sweep": cmd_sweep, "baseline": cmd_baseline}[args.command](cfg)
    except (ConfigurationError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
