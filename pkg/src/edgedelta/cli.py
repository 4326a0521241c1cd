"""Command-line entry point.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import experiments
from .domain import ConfigError, SimConfig, validate_config
from .engine import TASK_COLUMNS, metrics_rows, run
from .experiments import atomic_write, csv_text

log = logging.getLogger("edgedelta")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError([f"--set expects key=value, got '{item}'"])
        key, value = item.split("=", 1)
        out[key.strip()] = _parse_value(value.strip())
    return out


def load_config(args) -> SimConfig:
    cfg = SimConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from exc
        try:
            cfg = SimConfig.from_json(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
        except TypeError as exc:
            raise ConfigError([str(exc)]) from exc
    overrides = parse_overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return validate_config(cfg)


def _seeds(args, cfg: SimConfig) -> list[int]:
    n = experiments.QUICK_SEEDS if args.quick else (args.seeds or experiments.DEFAULT_SEEDS)
    return [cfg.seed + i for i in range(n)]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="dot-path override, e.g. ablation.enable_cache=false (repeatable)")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--seeds", type=int, help=f"seeds per cell (default {experiments.DEFAULT_SEEDS})")
    sweep.add_argument("--quick", action="store_true", help=f"{experiments.QUICK_SEEDS} seeds per cell")
    sweep.add_argument("--workers", type=int, default=1, help="parallel runs")

    p = _Parser(prog="edgedelta", description="Edge-federation orchestration simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="simulate one configuration")
    for name, helptext in (("ablate", "remove one mechanism at a time"),
                           ("isolate", "all 8 mechanism combinations"),
                           ("threshold", "similarity-threshold sweep"),
                           ("scale", "agent-count sweep"),
                           ("energy", "energy across baseline policies")):
        sub.add_parser(name, parents=[common, sweep], help=helptext)
    sub.add_parser("verify-theorems", parents=[common], help="closed-form values vs published claims")
    sub.add_parser("trace", parents=[common], help="export the generated task stream and fleet")
    sub.add_parser("config", parents=[common], help="print the resolved config as JSON")
    return p


def _metrics_csv(m) -> str:
    rows = metrics_rows(m)
    fields = ["schema_version", "row_type", *TASK_COLUMNS]
    fields += [k for k in rows[-1] if k not in fields]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, restval="", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_run(cfg: SimConfig, out: Path) -> str:
    m = run(cfg)
    atomic_write(out / "metrics.csv", _metrics_csv(m))
    agg = m.aggregates()
    summary = "\n".join(f"{k:28s} {v:.6g}" for k, v in agg.items()) + "\n"
    atomic_write(out / "summary.txt", summary)
    return summary


def cmd_trace(cfg: SimConfig, out: Path) -> str:
    import numpy as np

    from .workload import PROFILES, generate_fleet, generate_tasks

    fleet_ss, task_ss, _, _ = np.random.SeedSequence(cfg.seed).spawn(4)
    nodes = generate_fleet(cfg, np.random.default_rng(fleet_ss))
    tasks = generate_tasks(PROFILES[cfg.dataset_profile], cfg.n_agents, cfg.duration_ms,
                           np.random.default_rng(task_ss), cfg.embedding_dim)
    task_rows = [{"schema_version": 1, "task_id": t.id, "agent_id": t.agent_id,
                  "model": t.model_id.value, "arrival_ms": repr(t.arrival_ms),
                  "workload_gflop": repr(t.workload_gflop), "deadline_ms": repr(t.deadline_ms),
                  "input_size_mbit": repr(t.input_size_mbit)} for t in tasks]
    node_rows = [{"schema_version": 1, "node_id": n.id, "hardware": n.hardware.value,
                  "capacity_gflops": repr(n.capacity_gflops),
                  "hosted_models": ";".join(sorted(m.value for m in n.hosted_models)),
                  "power_active_w": repr(n.power_active_w), "power_idle_w": repr(n.power_idle_w)}
                 for n in nodes]
    atomic_write(out / "tasks.csv", csv_text(task_rows))
    atomic_write(out / "nodes.csv", csv_text(node_rows))
    return f"wrote {len(tasks)} tasks and {len(nodes)} nodes to {out}\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    try:
        if args.command == "config":
            sys.stdout.write(cfg.to_json())
            return 0
        if args.command == "verify-theorems":
            text = experiments.verify_theorems(cfg, seed=cfg.seed)
        elif args.command == "run":
            text = cmd_run(cfg, out)
        elif args.command == "trace":
            text = cmd_trace(cfg, out)
        else:
            study = experiments.STUDIES[args.command]
            if args.workers < 1:
                print("config error: --workers must be ≥ 1", file=sys.stderr)
                return 1
            _, text = study(cfg, _seeds(args, cfg), out=out, workers=args.workers)
            atomic_write(out / "summary.txt", text)
        atomic_write(out / "config.json", cfg.to_json())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
