"""Provider-agnostic chat-completion client for AI-based obfuscation/generation.

Speaks the de facto JSON chat-completion shape (model, messages, temperature)
over HTTP; endpoint URL, model, and bearer token are fully configurable, with
environment variables as the usual source. Every request/response pair is
appended to an audit log *before* validation runs, with the authorization
header stripped; API keys never reach disk.

Validation: extract the first fenced code block (else the longest
brace-balanced region), parse as MiniLang, then run the interpreter battery
against the original. Behavior divergence is recorded but does not invalidate
the result; the attack makes no semantic guarantee.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Optional

import httpx

from .attacks import make_battery
from .errors import EndpointError, MiniLangSyntaxError, QuotaExceeded
from .minilang.interpreter import run_trace
from .minilang.tokenizer import parse_program
from .tokens import Program

ENV_URL = "PLAGSHIELD_LLM_URL"
ENV_TOKEN = "PLAGSHIELD_LLM_TOKEN"
ENV_MODEL = "PLAGSHIELD_LLM_MODEL"

DEFAULT_OBFUSCATE_TEMPERATURE = 0.2
DEFAULT_GENERATE_TEMPERATURE = 0.7


@dataclass(frozen=True)
class PromptTemplate:
    id: int
    text: str
    mode: str  # obfuscate | generate

    def __post_init__(self):
        if not 1 <= self.id <= 15:
            raise ValueError("prompt id must lie in 1..15")
        if self.mode == "obfuscate" and "{code}" not in self.text:
            raise ValueError("obfuscate templates must contain {code}")
        if self.mode == "generate" and "{assignment}" not in self.text:
            raise ValueError("generate templates must contain {assignment}")
        if self.mode not in ("obfuscate", "generate"):
            raise ValueError(f"unknown template mode {self.mode!r}")


def load_prompt_file(path: str) -> list[PromptTemplate]:
    """One template per JSONL record: {"id": .., "mode": .., "text": ..}."""
    templates = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            record = json.loads(line)
            templates.append(PromptTemplate(record["id"], record["text"], record["mode"]))
    return templates


@dataclass
class EndpointConfig:
    url: str
    model: str
    auth_token: str = ""
    temperature: Optional[float] = None
    timeout: float = 60.0
    min_request_interval: float = 0.0
    audit_path: Optional[str] = None
    transport: Optional[httpx.BaseTransport] = field(default=None, repr=False)

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        url = os.environ.get(ENV_URL, "")
        if not url:
            raise EndpointError(f"no endpoint configured; set {ENV_URL}")
        return cls(url=url,
                   model=os.environ.get(ENV_MODEL, "default"),
                   auth_token=os.environ.get(ENV_TOKEN, ""),
                   **overrides)


@dataclass
class LlmJobResult:
    prompt_id: int
    attempts: int
    outcome: str  # valid | parse_failed | behavior_divergent | gave_up
    program: Optional[Program] = None
    divergence_note: str = ""

    def to_record(self) -> dict:
        return {"prompt_id": self.prompt_id, "attempts": self.attempts,
                "outcome": self.outcome, "divergence_note": self.divergence_note,
                "program_id": self.program.program_id if self.program else None}


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)


def extract_code(text: str) -> Optional[str]:
    """First fenced code block, else the longest brace-balanced fn region."""
    fence = _FENCE_RE.search(text)
    if fence:
        return fence.group(1).strip() or None
    best = None
    for match in re.finditer(r"\bfn\b", text):
        depth = 0
        seen_brace = False
        end = None
        for pos in range(match.start(), len(text)):
            ch = text[pos]
            if ch == "{":
                depth += 1
                seen_brace = True
            elif ch == "}":
                depth -= 1
                if depth < 0:
                    break
                if depth == 0 and seen_brace:
                    end = pos + 1  # keep extending over consecutive functions
        if end is not None:
            candidate = text[match.start():end].strip()
            if best is None or len(candidate) > len(best):
                best = candidate
    return best


class ChatClient:
    """Minimal chat-completion caller with rate limiting and audit logging."""

    def __init__(self, config: EndpointConfig):
        self.config = config
        self._client = httpx.Client(transport=config.transport, timeout=config.timeout)
        self._last_request = 0.0

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _throttle(self) -> None:
        wait = self.config.min_request_interval - (time.monotonic() - self._last_request)
        if wait > 0:
            time.sleep(wait)
        self._last_request = time.monotonic()

    def _audit(self, payload: dict, status: int, body: str) -> None:
        if not self.config.audit_path:
            return
        record = {"endpoint": self.config.url, "request": payload,
                  "status": status, "response": body}
        with open(self.config.audit_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    def complete(self, prompt: str, temperature: float) -> str:
        self._throttle()
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        headers = {"content-type": "application/json"}
        if self.config.auth_token:
            headers["authorization"] = f"Bearer {self.config.auth_token}"
        try:
            response = self._client.post(self.config.url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            self._audit(payload, -1, f"transport error: {exc}")
            raise EndpointError(f"transport failure: {exc}") from exc
        self._audit(payload, response.status_code, response.text)
        if response.status_code == 429:
            raise QuotaExceeded("endpoint rate limit or quota exhausted")
        if response.status_code >= 400:
            raise EndpointError(f"endpoint returned HTTP {response.status_code}")
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise EndpointError(f"malformed completion payload: {exc}") from exc


def _parse_candidate(code: str, program_id: str) -> Program:
    program = Program(program_id, ((f"{program_id}.mini", code + "\n"),))
    parse_program(program)
    return program


def obfuscate_via_llm(program: Program, template: PromptTemplate,
                      endpoint: EndpointConfig, max_attempts: int = 3,
                      output_id: Optional[str] = None) -> LlmJobResult:
    """Ask the model for an obfuscated variant; retry while unparseable."""
    if template.mode != "obfuscate":
        raise ValueError("template mode must be 'obfuscate'")
    source = "\n".join(text for _, text in program.files)
    prompt = template.text.replace("{code}", source)
    temperature = (endpoint.temperature if endpoint.temperature is not None
                   else DEFAULT_OBFUSCATE_TEMPERATURE)
    out_id = output_id or f"{program.program_id}+llm{template.id}"

    attempts = 0
    with ChatClient(endpoint) as client:
        while attempts < max_attempts:
            attempts += 1
            content = client.complete(prompt, temperature)
            code = extract_code(content)
            if code is None:
                continue
            try:
                candidate = _parse_candidate(code, out_id)
            except MiniLangSyntaxError:
                continue
            note = ""
            for vector in make_battery(template.id):
                if run_trace(program, vector) != run_trace(candidate, vector):
                    note = f"output diverges on stdin {vector[:4]}..."
                    break
            outcome = "behavior_divergent" if note else "valid"
            return LlmJobResult(template.id, attempts, outcome, candidate, note)
    return LlmJobResult(template.id, attempts, "parse_failed")


def generate_via_llm(assignment_text: str, template: PromptTemplate,
                     endpoint: EndpointConfig, n: int, seed_tag: str = "",
                     max_attempts: int = 3) -> list[LlmJobResult]:
    """Request n independent from-scratch solutions for an assignment text."""
    if template.mode != "generate":
        raise ValueError("template mode must be 'generate'")
    prompt = template.text.replace("{assignment}", assignment_text)
    temperature = (endpoint.temperature if endpoint.temperature is not None
                   else DEFAULT_GENERATE_TEMPERATURE)
    results: list[LlmJobResult] = []
    with ChatClient(endpoint) as client:
        for index in range(n):
            attempts = 0
            result = None
            while attempts < max_attempts:
                attempts += 1
                content = client.complete(prompt, temperature)
                code = extract_code(content)
                if code is None:
                    continue
                tag = f"-{seed_tag}" if seed_tag else ""
                out_id = f"llmgen{tag}-p{template.id}-{index}"
                try:
                    candidate = _parse_candidate(code, out_id)
                except MiniLangSyntaxError:
                    continue
                result = LlmJobResult(template.id, attempts, "valid", candidate)
                break
            results.append(result or LlmJobResult(template.id, attempts, "parse_failed"))
    return results
