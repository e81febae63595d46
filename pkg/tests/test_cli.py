import json

import pytest

from planbench import blocks, cli, llm, pddl, search, tasks
from planbench.service import replay_log

from conftest import CompletionScript, completion_server


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_writes_problems_and_manifest(tmp_path, capsys):
    out = tmp_path / "corpus"
    code, _, err = _run(
        capsys, "gen", "--blocks", "3", "--n", "4", "--seed", "11",
        "--out", str(out), "--with-optimal",
    )
    assert code == 0
    assert "wrote 4 problems" in err
    rows = [json.loads(l) for l in (out / "manifest.jsonl").read_text().splitlines()]
    assert [r["seed"] for r in rows] == [11, 12, 13, 14]
    domain = pddl.parse_domain((out / "domain.pddl").read_text())
    for row in rows:
        problem = pddl.parse_problem((out / row["files"]["problem"]).read_text(), domain)
        plan, _ = search.solve_optimal(domain, problem)
        assert plan.cost == row["optimal_cost"]


def test_solve_round_trips_through_files(tmp_path, capsys):
    out = tmp_path / "corpus"
    _run(capsys, "gen", "--blocks", "4", "--n", "1", "--seed", "3", "--out", str(out))
    code, stdout, err = _run(
        capsys, "solve", "--domain", str(out / "domain.pddl"),
        "--problem", str(out / "p-00000003.pddl"), "--optimal",
    )
    assert code == 0
    assert "cost=" in err and "expanded=" in err
    domain = pddl.parse_domain((out / "domain.pddl").read_text())
    problem = pddl.parse_problem((out / "p-00000003.pddl").read_text(), domain)
    plan = pddl.parse_plan(stdout, domain)
    from planbench.core import validate

    assert validate(problem, plan).valid


def test_curriculum_matches_library_output(tmp_path, capsys):
    out = tmp_path / "insts.jsonl"
    code, _, err = _run(
        capsys, "curriculum", "--task", "plan_generation", "--n", "3",
        "--seed", "5", "--out", str(out),
    )
    assert code == 0
    assert "wrote 3 instances" in err
    loaded = tasks.load_instances(out)
    direct = tasks.generate_curriculum("plan_generation", 3, seed=5)
    assert [i.id for i in loaded] == [i.id for i in direct]
    assert [i.prompt for i in loaded] == [i.prompt for i in direct]


def test_curriculum_disguise_modes(tmp_path, capsys):
    out = tmp_path / "disguised.jsonl"
    code, _, _ = _run(
        capsys, "curriculum", "--task", "plan_generation", "--n", "2",
        "--seed", "5", "--disguise", "deceptive", "--out", str(out),
    )
    assert code == 0
    loaded = tasks.load_instances(out)
    assert all(inst.id.endswith("-deceptive") for inst in loaded)


def test_eval_writes_report_histogram_and_records(tmp_path, capsys):
    instances_path = tmp_path / "insts.jsonl"
    _run(
        capsys, "curriculum", "--task", "plan_generation", "--n", "4",
        "--seed", "21", "--out", str(instances_path),
    )
    instances = tasks.load_instances(instances_path)
    script = CompletionScript()
    for inst in instances:
        script.responses[inst.prompt] = tasks.reference_completion(inst)
    with completion_server(script) as endpoint:
        config_path = tmp_path / "model.json"
        config_path.write_text(json.dumps({"endpoint": endpoint, "model": "scripted"}))
        report_path = tmp_path / "reports" / "run.md"
        code, _, err = _run(
            capsys, "eval", "--instances", str(instances_path),
            "--model-config", str(config_path),
            "--cache", str(tmp_path / "cache"), "--report", str(report_path),
        )
    assert code == 0
    assert "evaluated 4 instances" in err
    assert "| Plan Generation | 4 | 0 | 0 | 0 | 4 | 100.0% |" in report_path.read_text()
    histogram = (tmp_path / "reports" / "run-histogram.csv").read_text()
    assert histogram.startswith("num_blocks,optimal_length,correct,total")
    records = [
        json.loads(l)
        for l in (tmp_path / "reports" / "run-records.jsonl").read_text().splitlines()
    ]
    assert all(r["verdict"] == "correct" for r in records)


def test_repair_command_emits_valid_plan(tmp_path, capsys):
    out = tmp_path / "corpus"
    _run(capsys, "gen", "--blocks", "3", "--n", "1", "--seed", "8", "--out", str(out))
    domain = pddl.parse_domain((out / "domain.pddl").read_text())
    problem_path = out / "p-00000008.pddl"
    problem = pddl.parse_problem(problem_path.read_text(), domain)
    plan, _ = search.solve_optimal(domain, problem)
    broken = tmp_path / "broken.plan"
    # drop the first step so the seed plan no longer executes
    broken.write_text(pddl.emit_plan(type(plan)(plan.steps[1:])))
    code, stdout, err = _run(
        capsys, "repair", "--domain", str(out / "domain.pddl"),
        "--problem", str(problem_path), "--seed-plan", str(broken),
    )
    assert code == 0
    assert "edit_distance=" in err
    from planbench.core import validate

    assert validate(problem, pddl.parse_plan(stdout, domain)).valid


def test_replay_command_exit_codes(tmp_path, capsys):
    from fastapi.testclient import TestClient
    from planbench import service

    pool_path = tmp_path / "pool.jsonl"
    tasks.save_instances(
        tasks.generate_curriculum("plan_generation", 3, seed=2, num_blocks=3), pool_path
    )
    app = service.create_app(pool_path, log_dir=tmp_path)
    with TestClient(app) as client:
        sid = client.post("/session", json={}).json()["session_id"]
        client.post(f"/session/{sid}/plan/freeform", json={"text": "try"})
        client.post(f"/session/{sid}/plan/translation", json={"action_ids": []})
    log_path = tmp_path / service.EVENTS_FILENAME
    code, stdout, _ = _run(capsys, "replay", "--log", str(log_path), "--pool", str(pool_path))
    assert code == 0
    assert json.loads(stdout)["mismatches"] == []

    tampered = tmp_path / "tampered.jsonl"
    lines = []
    for line in log_path.read_text().splitlines():
        event = json.loads(line)
        if event["kind"] == "translation_submitted":
            event["payload"]["valid"] = True
        lines.append(json.dumps(event))
    tampered.write_text("\n".join(lines) + "\n")
    code, stdout, _ = _run(capsys, "replay", "--log", str(tampered), "--pool", str(pool_path))
    assert code == 1
    assert json.loads(stdout)["mismatches"]


def test_unknown_subcommand_is_an_error(capsys):
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
