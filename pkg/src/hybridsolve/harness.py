"""Run the direct and solver-assisted paradigms over a dataset.

A backend is anything with ``complete(system, user) -> str`` plus a
``metadata()`` dict. :class:`HttpBackend` talks to a chat-completion style
endpoint; :class:`MockFormulator` and :class:`EchoAnswerer` answer offline
from the dataset itself.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import httpx

from . import expr as ex
from .autodiff import differentiate
from .domains import DomainProblem, build_residual, dataset_fingerprint
from .metrics import ASSISTED, DIRECT, PredictionRecord
from .solver import SolverConfig, newton_raphson

log = logging.getLogger(__name__)

DIRECT_SYSTEM_PROMPT = (
    "You are an expert engineer. Read the query and provide the numerical answer directly. "
    'Return in JSON FORMAT {"answer":"<numerical answer upto 3 significant figures>"}'
)

ASSISTED_SYSTEM_PROMPT = (
    "You are an expert engineer. Read the query and extract: "
    "1. The transcendental equation in form f(x) = 0 using Python/NumPy syntax "
    "2. A reasonable initial guess x0 "
    'Output format: give the json {"equation": "Transcedental equation f(x) where x is root", '
    '"x0": "<initial guess>"}'
)


class ExtractionError(ValueError):
    pass


class BackendError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# response parsing

def _balanced_objects(text: str):
    """Yield every brace-balanced ``{...}`` substring, outermost first."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    yield text[start:i + 1]
                    break
        start = text.find("{", start + 1)


def _coerce_number(value: Any) -> Any:
    if isinstance(value, str):
        try:
            return float(value.strip().replace(",", ""))
        except ValueError:
            return value
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return float(value)
    return value


def extract_json_payload(raw: str, required: Sequence[str] = ()) -> dict:
    """First balanced JSON object in ``raw`` containing the ``required`` keys.

    Surrounding prose and code fences are ignored. String values that read
    as numbers come back as floats.
    """
    for candidate in _balanced_objects(raw):
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        if all(k in obj for k in required):
            return {k: _coerce_number(v) for k, v in obj.items()}
        missing = [k for k in required if k not in obj]
        raise ExtractionError(f"JSON payload is missing {missing}")
    raise ExtractionError("no JSON object found in response")


@dataclass(frozen=True)
class DirectResponse:
    answer: float


@dataclass(frozen=True)
class FormulatorResponse:
    equation: str
    x0: float

    def expression(self) -> ex.Expr:
        return ex.parse(self.equation)


def parse_direct_response(raw: str) -> DirectResponse:
    payload = extract_json_payload(raw, ["answer"])
    answer = payload["answer"]
    if not isinstance(answer, float):
        raise ExtractionError(f"answer is not numeric: {answer!r}")
    return DirectResponse(answer)


def parse_formulator_response(raw: str) -> FormulatorResponse:
    payload = extract_json_payload(raw, ["equation", "x0"])
    equation, x0 = payload["equation"], payload["x0"]
    if isinstance(equation, float):
        equation = repr(equation)
    if not isinstance(equation, str):
        raise ExtractionError(f"equation is not text: {equation!r}")
    if not isinstance(x0, float) or not math.isfinite(x0):
        raise ExtractionError(f"x0 is not a finite number: {x0!r}")
    return FormulatorResponse(equation, x0)


# ---------------------------------------------------------------------------
# backends

@dataclass
class BackendConfig:
    endpoint: str
    model: str
    temperature: float = 1.0
    token_env: str = "LLM_API_KEY"
    timeout: float = 120.0
    max_retries: int = 3
    parallelism: int = 4
    api_style: str = "openai"  # openai | anthropic | gemini
    max_tokens: int = 2048
    backoff: float = 1.0

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.api_style not in _ADAPTERS:
            raise ValueError(f"api_style must be one of {sorted(_ADAPTERS)}")

    @classmethod
    def from_file(cls, path) -> "BackendConfig":
        data = json.loads(Path(path).read_text())
        data = data.get("backend", data)
        return cls(**data)

    def metadata(self) -> dict:
        # only the variable name is kept, never the token
        return {"kind": "http", **asdict(self)}


def _openai_request(cfg: BackendConfig, system: str, user: str):
    body = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
    }
    return body, {}


def _openai_text(data: dict) -> str:
    return data["choices"][0]["message"]["content"] or ""


def _anthropic_request(cfg: BackendConfig, system: str, user: str):
    body = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "system": system,
        "messages": [{"role": "user", "content": user}],
    }
    return body, {"anthropic-version": "2023-06-01"}


def _anthropic_text(data: dict) -> str:
    return "".join(block.get("text", "") for block in data["content"])


def _gemini_request(cfg: BackendConfig, system: str, user: str):
    body = {
        "systemInstruction": {"parts": [{"text": system}]},
        "contents": [{"role": "user", "parts": [{"text": user}]}],
        "generationConfig": {"temperature": cfg.temperature},
    }
    return body, {}


def _gemini_text(data: dict) -> str:
    return "".join(p.get("text", "") for p in data["candidates"][0]["content"]["parts"])


_ADAPTERS = {
    "openai": (_openai_request, _openai_text),
    "anthropic": (_anthropic_request, _anthropic_text),
    "gemini": (_gemini_request, _gemini_text),
}


class HttpBackend:
    """Chat-completion client with bearer auth and bounded retries."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._transport = transport

    @property
    def parallelism(self) -> int:
        return self.config.parallelism

    def metadata(self) -> dict:
        return self.config.metadata()

    def _headers(self) -> dict:
        token = os.environ.get(self.config.token_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
            if self.config.api_style == "anthropic":
                headers["x-api-key"] = token
            elif self.config.api_style == "gemini":
                headers["x-goog-api-key"] = token
        return headers

    def complete(self, system: str, user: str) -> str:
        cfg = self.config
        build, read = _ADAPTERS[cfg.api_style]
        body, extra = build(cfg, system, user)
        headers = {**self._headers(), **extra}
        last_error = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                with httpx.Client(timeout=cfg.timeout, transport=self._transport) as client:
                    resp = client.post(cfg.endpoint, json=body, headers=headers)
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                    log.warning("attempt %d: %s from %s", attempt + 1, last_error, cfg.endpoint)
                    continue
                resp.raise_for_status()
                return read(resp.json())
            except httpx.HTTPStatusError as exc:
                raise BackendError(f"HTTP {exc.response.status_code}: {exc.response.text[:200]}") from exc
            except (httpx.TransportError, KeyError, IndexError, ValueError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d failed: %s", attempt + 1, last_error)
        raise BackendError(f"giving up after {cfg.max_retries + 1} attempts: {last_error}")


class _DatasetBackend:
    parallelism = 1
    temperature = 1.0

    def __init__(self, dataset: Sequence[DomainProblem]):
        self._by_query = {p.query: p for p in dataset}

    def lookup(self, query: str) -> Optional[DomainProblem]:
        return self._by_query.get(query)


PERTURBATIONS = (None, "wrong_constant", "bad_x0", "wrong_sign")


def _scale_first_constant(e: ex.Expr, factor: float) -> tuple[ex.Expr, bool]:
    if isinstance(e, ex.Constant):
        return ex.Constant(e.value * factor), True
    if isinstance(e, ex.Variable):
        return e, False
    if isinstance(e, ex.Unary):
        c, done = _scale_first_constant(e.child, factor)
        return ex.Unary(e.op, c), done
    if isinstance(e, ex.Call):
        c, done = _scale_first_constant(e.arg, factor)
        return ex.Call(e.func, c), done
    left, done = _scale_first_constant(e.left, factor)
    if done:
        return ex.Binary(e.op, left, e.right), True
    right, done = _scale_first_constant(e.right, factor)
    return ex.Binary(e.op, e.left, right), done


class MockFormulator(_DatasetBackend):
    """Offline formulator answering with each problem's own residual.

    ``perturbation`` injects a known defect: ``wrong_constant`` scales the
    first numeric constant by 1.5, ``bad_x0`` replaces the guess with 1e6,
    ``wrong_sign`` flips a top-level subtraction into an addition.
    """

    def __init__(self, dataset: Sequence[DomainProblem], perturbation: Optional[str] = None):
        super().__init__(dataset)
        if perturbation not in PERTURBATIONS:
            raise ValueError(f"unknown perturbation {perturbation!r}")
        self.perturbation = perturbation

    def metadata(self) -> dict:
        return {"kind": "mock", "model": "mock", "role": "formulator", "temperature": self.temperature,
                "perturbation": self.perturbation}

    def formulate(self, problem: DomainProblem) -> FormulatorResponse:
        r = build_residual(problem.domain, problem.params)
        e, x0 = r.expr, r.x0
        if self.perturbation == "wrong_constant":
            e, _ = _scale_first_constant(e, 1.5)
        elif self.perturbation == "bad_x0":
            x0 = 1e6
        elif self.perturbation == "wrong_sign" and isinstance(e, ex.Binary) and e.op == "sub":
            e = ex.Binary("add", e.left, e.right)
        return FormulatorResponse(ex.render(e), x0)

    def complete(self, system: str, user: str) -> str:
        problem = self.lookup(user)
        if problem is None:
            return "I could not identify this problem."
        resp = self.formulate(problem)
        return json.dumps({"equation": resp.equation, "x0": repr(resp.x0)})


class EchoAnswerer(_DatasetBackend):
    """Offline direct answerer returning ``scale * ground_truth``."""

    def __init__(self, dataset: Sequence[DomainProblem], scale: float = 1.0):
        super().__init__(dataset)
        self.scale = scale

    def metadata(self) -> dict:
        return {"kind": "mock", "model": "mock", "role": "echo-answerer", "temperature": self.temperature,
                "scale": self.scale}

    def complete(self, system: str, user: str) -> str:
        problem = self.lookup(user)
        if problem is None:
            return "No idea."
        return json.dumps({"answer": repr(problem.ground_truth * self.scale)})


class StaticBackend:
    """Returns the same text (or ``fn(system, user)``) for every request."""

    parallelism = 1

    def __init__(self, reply: str | Callable[[str, str], str], model: str = "static"):
        self.reply = reply
        self.model = model

    def metadata(self) -> dict:
        return {"kind": "static", "model": self.model, "temperature": 1.0}

    def complete(self, system: str, user: str) -> str:
        if callable(self.reply):
            return self.reply(system, user)
        return self.reply


# ---------------------------------------------------------------------------
# runs

@dataclass
class RunResult:
    run_id: str
    paradigm: str
    dataset_fingerprint: str
    backend: dict
    records: list
    exchanges: list
    solver: Optional[dict] = None
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def manifest(self) -> dict:
        return {
            "run_id": self.run_id,
            "paradigm": self.paradigm,
            "dataset_fingerprint": self.dataset_fingerprint,
            "backend": self.backend,
            "solver": self.solver,
            "created": self.created,
            "n_records": len(self.records),
        }

    def save(self, path) -> None:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
        Path(f"{path}.manifest.json").write_text(json.dumps(self.manifest(), indent=2) + "\n")
        with open(f"{path}.exchanges.jsonl", "w", encoding="utf-8") as fh:
            for x in self.exchanges:
                fh.write(json.dumps(x, sort_keys=True) + "\n")


def load_records(path) -> list[PredictionRecord]:
    with open(path, encoding="utf-8") as fh:
        return [PredictionRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def load_manifest(path) -> dict:
    p = Path(f"{path}.manifest.json")
    return json.loads(p.read_text()) if p.exists() else {}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _run_id(fingerprint: str, paradigm: str, backend: dict, solver: Optional[dict]) -> str:
    blob = json.dumps([fingerprint, paradigm, backend, solver], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _exchange(problem: DomainProblem, paradigm: str, system: str, fn) -> tuple[Optional[str], dict]:
    started = _now()
    error = None
    response = None
    try:
        response = fn(system, problem.query)
    except Exception as exc:  # one bad call must not abort the run
        error = f"{type(exc).__name__}: {exc}"
        log.warning("problem %d: backend failed: %s", problem.id, error)
    return response, {
        "problem_id": problem.id,
        "paradigm": paradigm,
        "system": system,
        "user": problem.query,
        "response": response,
        "error": error,
        "started": started,
        "finished": _now(),
    }


def _map(fn, items, parallelism: int):
    if parallelism <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def run_direct(dataset: Sequence[DomainProblem], answerer, parallelism: Optional[int] = None) -> RunResult:
    """Ask for the numeric answer directly; unparseable replies become NaN."""
    if not dataset:
        raise ValueError("dataset is empty")

    def one(problem: DomainProblem):
        response, exchange = _exchange(problem, DIRECT, DIRECT_SYSTEM_PROMPT, answerer.complete)
        predicted, note = math.nan, None
        if response is None:
            note = f"transport_error: {exchange['error']}"
        else:
            try:
                predicted = parse_direct_response(response).answer
            except ExtractionError as exc:
                note = f"unparseable: {exc}"
        record = PredictionRecord(problem.id, problem.domain, DIRECT, predicted,
                                  problem.ground_truth, annotation=note)
        return record, exchange

    results = _map(one, dataset, parallelism or getattr(answerer, "parallelism", 1))
    meta = answerer.metadata()
    fp = dataset_fingerprint(dataset)
    return RunResult(_run_id(fp, DIRECT, meta, None), DIRECT, fp, meta,
                     [r for r, _ in results], [x for _, x in results])


def solve_formulation(resp: FormulatorResponse, config: SolverConfig, ground_truth: Optional[float] = None):
    f = resp.expression()
    return newton_raphson(f, differentiate(f), resp.x0, config, ground_truth)


def run_assisted(
    dataset: Sequence[DomainProblem],
    formulator,
    config: SolverConfig = SolverConfig(),
    parallelism: Optional[int] = None,
) -> RunResult:
    """Ask for a residual and guess, then solve it with Newton-Raphson.

    The prediction is always the solver's root, never a number the model
    wrote. Malformed formulations are recorded with status
    ``formulation_error`` and a NaN prediction.
    """
    if not dataset:
        raise ValueError("dataset is empty")

    def one(problem: DomainProblem):
        response, exchange = _exchange(problem, ASSISTED, ASSISTED_SYSTEM_PROMPT, formulator.complete)

        def failed(status: str, note: str):
            return PredictionRecord(problem.id, problem.domain, ASSISTED, math.nan, problem.ground_truth,
                                    iterations=0, solve_status=status, annotation=note)

        if response is None:
            return failed("transport_error", exchange["error"]), exchange
        try:
            resp = parse_formulator_response(response)
            gt = problem.ground_truth if config.mode == "replication" else None
            outcome = solve_formulation(resp, config, gt)
        except (ExtractionError, ex.ParseError) as exc:
            return failed("formulation_error", f"{type(exc).__name__}: {exc}"), exchange
        predicted = math.nan if outcome.root is None else outcome.root
        exchange = {**exchange, "solver": {"status": outcome.status, "iterations": outcome.iterations,
                                           "unrounded": outcome.unrounded}}
        record = PredictionRecord(problem.id, problem.domain, ASSISTED, predicted, problem.ground_truth,
                                  iterations=outcome.iterations, solve_status=outcome.status)
        return record, exchange

    results = _map(one, dataset, parallelism or getattr(formulator, "parallelism", 1))
    meta = formulator.metadata()
    fp = dataset_fingerprint(dataset)
    solver = asdict(config)
    return RunResult(_run_id(fp, ASSISTED, meta, solver), ASSISTED, fp, meta,
                     [r for r, _ in results], [x for _, x in results], solver=solver)


def mock_formulator(dataset: Sequence[DomainProblem], perturbation: Optional[str] = None) -> MockFormulator:
    return MockFormulator(dataset, perturbation)


__all__ = [
    "ASSISTED_SYSTEM_PROMPT",
    "DIRECT_SYSTEM_PROMPT",
    "BackendConfig",
    "BackendError",
    "DirectResponse",
    "EchoAnswerer",
    "ExtractionError",
    "FormulatorResponse",
    "HttpBackend",
    "MockFormulator",
    "RunResult",
    "StaticBackend",
    "extract_json_payload",
    "load_manifest",
    "load_records",
    "mock_formulator",
    "parse_direct_response",
    "parse_formulator_response",
    "run_assisted",
    "run_direct",
]
