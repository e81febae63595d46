"""LLM querying and suite evaluation.

Talks to any completions-style HTTP endpoint (POST a JSON body with model,
prompt, temperature; read choices[0].text). Responses are cached in a
directory of content-addressed JSON files keyed by (model, temperature,
prompt), so re-running a suite is free and reproducible. Scoring never
touches the network: it runs as an offline pass over stored completions.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field

import httpx

from .tasks import TASKS, TestInstance, score_completion


class LLMClientError(Exception):
    pass


@dataclass(frozen=True)
class LLMConfig:
    endpoint: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 512
    stop: tuple[str, ...] = ()
    timeout: float = 30.0
    max_parallel: int = 4
    max_retries: int = 3
    retry_backoff: float = 0.5
    auth_env: str = "PLANBENCH_API_KEY"

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ValueError("endpoint must be a non-empty URL")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @staticmethod
    def from_file(path: str) -> LLMConfig:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if "stop" in raw:
            raw["stop"] = tuple(raw["stop"])
        return LLMConfig(**raw)


def cache_key(config: LLMConfig, prompt: str) -> str:
    material = f"{config.model}\x00{config.temperature!r}\x00{prompt}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _cache_path(cache_dir: str, key: str) -> str:
    return os.path.join(cache_dir, f"{key}.json")


def _cache_read(cache_dir: str, key: str) -> str | None:
    try:
        with open(_cache_path(cache_dir, key), encoding="utf-8") as fh:
            return json.load(fh)["completion"]
    except (FileNotFoundError, json.JSONDecodeError, KeyError):
        return None


def _cache_write(cache_dir: str, key: str, config: LLMConfig, prompt: str, completion: str) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    record = {
        "completion": completion,
        "model": config.model,
        "temperature": config.temperature,
        "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
        "created": time.time(),
    }
    # write-then-rename keeps concurrent readers from seeing partial files
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record, fh)
        os.replace(tmp, _cache_path(cache_dir, key))
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def query(config: LLMConfig, prompt: str, cache_dir: str | None = None) -> str:
    """Completion for a prompt, cache-first."""
    if cache_dir is not None:
        cached = _cache_read(cache_dir, cache_key(config, prompt))
        if cached is not None:
            return cached

    headers = {"Content-Type": "application/json"}
    token = os.environ.get(config.auth_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": config.model,
        "prompt": prompt,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    if config.stop:
        body["stop"] = list(config.stop)

    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.retry_backoff * (2 ** (attempt - 1)))
        try:
            response = httpx.post(
                config.endpoint, json=body, headers=headers, timeout=config.timeout
            )
        except httpx.HTTPError as exc:
            last_error = exc
            continue
        if response.status_code == 429 or response.status_code >= 500:
            retry_after = response.headers.get("Retry-After")
            if retry_after is not None:
                try:
                    time.sleep(min(float(retry_after), 30.0))
                except ValueError:
                    pass
            last_error = LLMClientError(
                f"endpoint returned {response.status_code}: {response.text[:200]}"
            )
            continue
        if response.status_code != 200:
            raise LLMClientError(
                f"endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            completion = response.json()["choices"][0]["text"]
        except (KeyError, IndexError, ValueError) as exc:
            raise LLMClientError(f"malformed completion response: {exc}") from exc
        if cache_dir is not None:
            _cache_write(cache_dir, cache_key(config, prompt), config, prompt, completion)
        return completion

    raise LLMClientError(f"request failed after {config.max_retries + 1} attempts: {last_error}")


@dataclass
class EvalRecord:
    instance_id: str
    task: str
    completion: str | None
    verdict: str  # correct | incorrect | ignored | errored
    latency: float
    num_blocks: int
    optimal_cost: int | None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class EvalTable:
    per_task: dict[str, dict[str, int]]
    histogram: dict[tuple[int, int], dict[str, int]]

    def accuracy(self, task: str) -> float:
        row = self.per_task[task]
        return row["correct"] / row["total"] if row["total"] else 0.0


def evaluate_instance(
    instance: TestInstance, config: LLMConfig, cache_dir: str | None
) -> EvalRecord:
    start = time.monotonic()
    payload = instance.payload
    try:
        completion = query(config, instance.prompt, cache_dir=cache_dir)
    except LLMClientError as exc:
        return EvalRecord(
            instance_id=instance.id,
            task=instance.task,
            completion=None,
            verdict="errored",
            latency=time.monotonic() - start,
            num_blocks=payload.get("num_blocks", 0),
            optimal_cost=payload.get("optimal_cost"),
            diagnostics={"error": str(exc)},
        )
    latency = time.monotonic() - start
    verdict, diagnostics = score_completion(instance, completion)
    return EvalRecord(
        instance_id=instance.id,
        task=instance.task,
        completion=completion,
        verdict=verdict,
        latency=latency,
        num_blocks=payload.get("num_blocks", 0),
        optimal_cost=payload.get("optimal_cost"),
        diagnostics=diagnostics,
    )


def build_table(records: list[EvalRecord]) -> EvalTable:
    """Pure fold over records; insensitive to their order."""
    per_task: dict[str, dict[str, int]] = {}
    histogram: dict[tuple[int, int], dict[str, int]] = {}
    for rec in sorted(records, key=lambda r: r.instance_id):
        row = per_task.setdefault(
            rec.task,
            {"correct": 0, "incorrect": 0, "ignored": 0, "errored": 0, "total": 0},
        )
        row[rec.verdict] += 1
        row["total"] += 1
        if rec.optimal_cost is not None:
            cell = histogram.setdefault(
                (rec.num_blocks, rec.optimal_cost), {"correct": 0, "total": 0}
            )
            cell["total"] += 1
            if rec.verdict == "correct":
                cell["correct"] += 1
    return EvalTable(per_task=per_task, histogram=histogram)


def run_suite(
    instances: list[TestInstance],
    config: LLMConfig,
    cache_dir: str | None = None,
) -> tuple[list[EvalRecord], EvalTable]:
    """Query, extract and score every instance. Per-instance failures become
    errored records; the suite itself never aborts."""
    records: list[EvalRecord] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.max_parallel) as pool:
        futures = {
            pool.submit(evaluate_instance, inst, config, cache_dir): inst
            for inst in instances
        }
        for future in concurrent.futures.as_completed(futures):
            inst = futures[future]
            try:
                records.append(future.result())
            except Exception as exc:  # defensive: scoring bugs become errored records
                records.append(
                    EvalRecord(
                        instance_id=inst.id,
                        task=inst.task,
                        completion=None,
                        verdict="errored",
                        latency=0.0,
                        num_blocks=inst.payload.get("num_blocks", 0),
                        optimal_cost=inst.payload.get("optimal_cost"),
                        diagnostics={"error": repr(exc)},
                    )
                )
    records.sort(key=lambda r: r.instance_id)
    return records, build_table(records)


TASK_LABELS = {
    "plan_generation": "Plan Generation",
    "optimal_planning": "Optimal Planning",
    "plan_execution": "Plan Execution (Reasoning about Plans)",
    "goal_shuffle": "Robustness: Goal Reordering",
    "goal_full_to_partial": "Robustness: Full to Partial Goal",
    "goal_partial_to_full": "Robustness: Partial to Full Goal",
    "plan_reuse": "Plan Reuse",
    "replanning": "Replanning",
    "generalization": "Plan Generalization",
}


def report_markdown(table: EvalTable) -> str:
    lines = [
        "| Task | Correct | Incorrect | Ignored | Errored | Total | Accuracy |",
        "| --- | ---: | ---: | ---: | ---: | ---: | ---: |",
    ]
    ordered = [t for t in TASKS if t in table.per_task] + sorted(
        t for t in table.per_task if t not in TASKS
    )
    for task in ordered:
        row = table.per_task[task]
        accuracy = row["correct"] / row["total"] if row["total"] else 0.0
        lines.append(
            f"| {TASK_LABELS.get(task, task)} | {row['correct']} | {row['incorrect']} "
            f"| {row['ignored']} | {row['errored']} | {row['total']} | {accuracy:.1%} |"
        )
    return "\n".join(lines) + "\n"


def report_histogram_csv(table: EvalTable) -> str:
    lines = ["num_blocks,optimal_length,correct,total"]
    for (num_blocks, optimal_len) in sorted(table.histogram):
        cell = table.histogram[(num_blocks, optimal_len)]
        lines.append(f"{num_blocks},{optimal_len},{cell['correct']},{cell['total']}")
    return "\n".join(lines) + "\n"


def report(table: EvalTable, records: list[EvalRecord]) -> tuple[str, str]:
    """(markdown accuracy table, histogram CSV)."""
    return report_markdown(table), report_histogram_csv(table)


def save_records(records: list[EvalRecord], path: str) -> None:
    import dataclasses

    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(dataclasses.asdict(rec)) + "\n")
