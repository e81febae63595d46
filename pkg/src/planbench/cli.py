"""Command-line entry points: solve, gen, curriculum, eval, repair, serve, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import blocks, llm, pddl, repair as repair_mod, search, service, tasks
from .core import Plan


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _cmd_solve(args: argparse.Namespace) -> int:
    domain = pddl.parse_domain(_read(args.domain))
    problem = pddl.parse_problem(_read(args.problem), domain)
    if args.optimal:
        plan, stats = search.solve_optimal(domain, problem)
        print(
            f"cost={plan.cost} expanded={stats.expanded} generated={stats.generated} "
            f"wall_time={stats.wall_time:.3f}s",
            file=sys.stderr,
        )
    else:
        plan = search.solve_satisficing(domain, problem)
        print(f"cost={plan.cost}", file=sys.stderr)
    sys.stdout.write(pddl.emit_plan(plan))
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    domain = blocks.blocksworld_domain()
    domain_file = out / "domain.pddl"
    domain_file.write_text(pddl.emit_domain(domain), encoding="utf-8")
    manifest = out / "manifest.jsonl"
    with manifest.open("w", encoding="utf-8") as fh:
        for i in range(args.n):
            seed = args.seed + i
            spec = blocks.BlocksworldInstanceSpec(
                num_blocks=args.blocks, goal_kind=args.goal, seed=seed
            )
            problem = blocks.gen_instance(spec)
            name = f"p-{seed:08d}"
            problem_file = out / f"{name}.pddl"
            problem_file.write_text(pddl.emit_problem(problem), encoding="utf-8")
            optimal_cost: int | None = None
            if args.with_optimal:
                plan, _ = search.solve_optimal(domain, problem)
                optimal_cost = plan.cost
            row = {
                "id": name,
                "seed": seed,
                "files": {"domain": domain_file.name, "problem": problem_file.name},
                "optimal_cost": optimal_cost,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"wrote {args.n} problems and {manifest}", file=sys.stderr)
    return 0


def _cmd_curriculum(args: argparse.Namespace) -> int:
    disguise_mode = {"none": "none", "deceptive": "deceptive", "random": "randomized"}[
        args.disguise
    ]
    instances = tasks.generate_curriculum(
        args.task,
        args.n,
        seed=args.seed,
        n_shots=args.shots,
        disguise_mode=disguise_mode,
    )
    tasks.save_instances(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}", file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    instances = tasks.load_instances(args.instances)
    config = llm.LLMConfig.from_file(args.model_config)
    records, table = llm.run_suite(instances, config, cache_dir=args.cache)
    markdown, histogram = llm.report(table, records)
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(markdown, encoding="utf-8")
    hist_path = report_path.with_name(report_path.stem + "-histogram.csv")
    hist_path.write_text(histogram, encoding="utf-8")
    records_path = report_path.with_name(report_path.stem + "-records.jsonl")
    llm.save_records(records, records_path)
    print(
        f"evaluated {len(records)} instances; report {report_path}, "
        f"histogram {hist_path}, records {records_path}",
        file=sys.stderr,
    )
    return 0


def _cmd_repair(args: argparse.Namespace) -> int:
    domain = pddl.parse_domain(_read(args.domain))
    problem = pddl.parse_problem(_read(args.problem), domain)
    seed_plan = pddl.parse_plan(_read(args.seed_plan), domain)
    result = repair_mod.repair(domain, problem, seed_plan, rng_seed=args.seed)
    sys.stdout.write(pddl.emit_plan(result.final))
    print(
        f"edit_distance={result.edit_distance} iterations={result.iterations} "
        f"fell_back={result.fell_back_to_planner} wall_time={result.wall_time:.3f}s",
        file=sys.stderr,
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    app = service.create_app(
        pool_path=args.pool,
        suggestions_path=args.suggestions,
        log_dir=args.log,
        seed=args.seed,
        reuse=args.reuse,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    outcome = service.replay_log(args.log, args.pool)
    print(json.dumps(outcome, indent=2))
    return 0 if not outcome["mismatches"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a PDDL problem and print the plan")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--optimal", action="store_true", help="find a shortest plan")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("gen", help="generate blocksworld instances")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--goal", choices=("full", "partial"), default="full")
    p.add_argument("--out", required=True)
    p.add_argument("--with-optimal", action="store_true", help="record optimal costs")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("curriculum", help="generate test instances for one task family")
    p.add_argument("--task", choices=tasks.TASKS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--disguise", choices=("none", "deceptive", "random"), default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_curriculum)

    p = sub.add_parser("eval", help="run instances against a completions endpoint")
    p.add_argument("--instances", required=True)
    p.add_argument("--model-config", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("repair", help="repair a broken plan by local search")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--seed-plan", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_repair)

    p = sub.add_parser("serve", help="run the study service")
    p.add_argument("--pool", required=True)
    p.add_argument("--suggestions", default=None)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--log", default=".")
    p.add_argument("--ui", default=None, help="directory with the built study UI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reuse", action="store_true", help="reuse instances once the pool runs out")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="recompute verdicts from a study event log")
    p.add_argument("--log", required=True)
    p.add_argument("--pool", required=True)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
