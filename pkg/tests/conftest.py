from __future__ import annotations

import contextlib
import json
import random
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from planbench import blocks
from planbench.core import Plan, Problem, ground_all


@pytest.fixture(scope="session")
def domain():
    return blocks.blocksworld_domain()


def problem_from_stacks(
    init_stacks: tuple[tuple[str, ...], ...],
    goal_stacks: tuple[tuple[str, ...], ...],
    goal_kind: str = "full",
) -> Problem:
    objects = tuple(sorted(b for s in init_stacks for b in s))
    return Problem(
        domain_name="blocksworld",
        objects=objects,
        init=blocks.state_from_config(init_stacks),
        goal=blocks.placement_atoms(goal_stacks),
        goal_kind=goal_kind,
    )


def corrupt_plan(rng: random.Random, plan: Plan, pool, k: int) -> Plan:
    """k random edits (delete / insert / replace) over a plan's steps."""
    steps = list(plan.steps)
    for _ in range(k):
        op = rng.choice(("delete", "insert", "replace"))
        if op == "delete" and steps:
            steps.pop(rng.randrange(len(steps)))
        elif op == "insert":
            steps.insert(rng.randrange(len(steps) + 1), rng.choice(pool))
        elif steps:
            steps[rng.randrange(len(steps))] = rng.choice(pool)
    return Plan(tuple(steps))


def random_solved_instance(domain, seed: int, num_blocks: int, goal_kind: str = "full"):
    from planbench import search

    spec = blocks.BlocksworldInstanceSpec(
        num_blocks=num_blocks, goal_kind=goal_kind, seed=seed
    )
    problem = blocks.gen_instance(spec)
    plan, _ = search.solve_optimal(domain, problem)
    return problem, plan


def action_pool(domain, objects):
    return ground_all(domain, objects)


class CompletionScript:
    """Mutable behavior for the mock completions endpoint."""

    def __init__(self):
        self.responses: dict[str, str] = {}  # prompt -> completion text
        self.default = "[PLAN END]"
        self.fail_first = 0  # initial requests answered with a 500
        self.status_once: tuple[int, str] | None = None
        self.hits = 0
        self.auth_headers: list[str | None] = []


class _CompletionHandler(BaseHTTPRequestHandler):
    script: CompletionScript

    def do_POST(self):
        s = self.script
        s.hits += 1
        s.auth_headers.append(self.headers.get("Authorization"))
        if s.status_once is not None:
            status, body = s.status_once
            s.status_once = None
            self.send_response(status)
            self.end_headers()
            self.wfile.write(body.encode())
            return
        if s.fail_first > 0:
            s.fail_first -= 1
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"boom")
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        text = s.responses.get(payload["prompt"], s.default)
        body = json.dumps({"choices": [{"text": text}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@contextlib.contextmanager
def completion_server(script: CompletionScript):
    """Yields the /v1/completions URL of a throwaway local endpoint."""
    handler = type("Handler", (_CompletionHandler,), {"script": script})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}/v1/completions"
    finally:
        server.shutdown()
