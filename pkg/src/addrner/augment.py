"""Chat-completion client that asks an LLM for new placeholder templates.

Replies are parsed line by line with the template grammar from
:mod:`addrner.generate`; every accepted line must also smoke-render to a
BIO-valid sentence. Lines that fail either check are kept with a reason so
they can be corrected by hand and fed back through :func:`review_queue`.

The request body follows the common chat-completion schema::

    POST <endpoint>
    {"model": "...", "messages": [{"role": "system", ...}, {"role": "user", ...}],
     "temperature": 0.7}

and the reply is read from ``choices[0].message.content``.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

import httpx

from .errors import AugmentError, TemplateError
from .gazetteer import Gazetteer
from .generate import GenerationConfig, Template, parse_template, render_template, template_text

log = logging.getLogger(__name__)

ENV_ENDPOINT = "ADDRNER_LLM_ENDPOINT"
ENV_API_KEY = "ADDRNER_LLM_API_KEY"
ENV_MODEL = "ADDRNER_LLM_MODEL"

MAX_TEMPLATES_PER_CALL = 100
MAX_ATTEMPTS = 3
DEFAULT_CONCURRENCY = 4

SYSTEM_PROMPT = (
    "Generuješ vety, ktorými ľudia diktujú svoju adresu po slovensky. "
    "Namiesto konkrétnych hodnôt použi zástupné slová streetname, municipalityname, "
    "housenumber a postcode. Každú vetu napíš na samostatný riadok, bez číslovania "
    "a bez anotácií."
)

SMOKE_GAZETTEER = Gazetteer(
    frozenset({"Hlavná", "Nábrežie mládeže"}),
    frozenset({"Košice", "Banská Bystrica"}),
)


@dataclass(frozen=True)
class AugmentRequest:
    pattern_description: str
    num_templates: int
    model_name: str
    endpoint: str
    api_key: str = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.num_templates <= MAX_TEMPLATES_PER_CALL:
            raise ValueError(f"num_templates must be in 1..{MAX_TEMPLATES_PER_CALL}")

    @classmethod
    def from_env(cls, pattern_description: str, num_templates: int, **overrides) -> "AugmentRequest":
        endpoint = overrides.pop("endpoint", None) or os.environ.get(ENV_ENDPOINT)
        api_key = overrides.pop("api_key", None) or os.environ.get(ENV_API_KEY)
        model = overrides.pop("model_name", None) or os.environ.get(ENV_MODEL)
        if not endpoint or not api_key or not model:
            raise AugmentError(
                f"set {ENV_ENDPOINT}, {ENV_API_KEY} and {ENV_MODEL} (or pass them explicitly)"
            )
        return cls(pattern_description, num_templates, model, endpoint, api_key)

    def body(self) -> dict:
        user = (
            f"Vygeneruj {self.num_templates} rôznych viet podľa vzoru: {self.pattern_description}. "
            "Niektoré vety môžu obsahovať zaváhania ako ehm alebo no."
        )
        return {
            "model": self.model_name,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": user},
            ],
            "temperature": 0.7,
        }


@dataclass(frozen=True)
class AugmentResult:
    raw_text: str
    parsed_templates: tuple[Template, ...]
    rejected: tuple[tuple[str, str], ...]  # (raw line, reason)

    def as_dict(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "parsed_templates": [template_text(t) for t in self.parsed_templates],
            "rejected": [{"line": line, "reason": reason} for line, reason in self.rejected],
        }


def validate_template_line(line: str) -> Template:
    """Grammar check plus a smoke render; raises TemplateError with the reason."""
    template = parse_template(line)
    cfg = GenerationConfig(1, 1, shuffle=True, omit=True, with_noise=True)
    rng = random.Random(0)
    try:
        for _ in range(3):
            render_template(template, SMOKE_GAZETTEER, cfg, rng)
    except (ValueError, TemplateError) as exc:
        raise TemplateError(f"smoke render failed: {exc}") from None
    return template


def parse_reply(text: str) -> AugmentResult:
    parsed: list[Template] = []
    rejected: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            parsed.append(validate_template_line(line))
        except TemplateError as exc:
            rejected.append((line, str(exc)))
    if not parsed and not rejected:
        warnings.warn("LLM reply contained no template lines", RuntimeWarning, stacklevel=2)
    return AugmentResult(text, tuple(parsed), tuple(rejected))


def _reply_content(payload) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise AugmentError("unparseable response body: no choices[0].message.content") from None
    if content is None:
        return ""
    if not isinstance(content, str):
        raise AugmentError("unparseable response body: content is not a string")
    return content


def request_templates(
    req: AugmentRequest,
    client: httpx.Client | None = None,
    timeout: float = 60.0,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> AugmentResult:
    """One chat-completion call, retried with exponential backoff on network errors."""
    own_client = client is None
    client = client or httpx.Client(timeout=timeout)
    headers = {"Authorization": f"Bearer {req.api_key}", "Content-Type": "application/json"}
    try:
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                resp = client.post(req.endpoint, json=req.body(), headers=headers)
            except httpx.TransportError as exc:
                if attempt == MAX_ATTEMPTS:
                    raise AugmentError(f"network failure after {attempt} attempts: {exc}") from exc
                delay = backoff * 2 ** (attempt - 1)
                log.warning("request failed (%s), retrying in %.1fs", exc, delay)
                sleep(delay)
                continue
            if resp.status_code != 200:
                raise AugmentError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                payload = resp.json()
            except ValueError:
                raise AugmentError("unparseable response body: not JSON") from None
            return parse_reply(_reply_content(payload))
    finally:
        if own_client:
            client.close()
    raise AssertionError("unreachable")


def request_many(
    reqs: Sequence[AugmentRequest],
    max_concurrency: int = DEFAULT_CONCURRENCY,
    **kwargs,
) -> list[AugmentResult]:
    with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
        return list(pool.map(lambda r: request_templates(r, **kwargs), reqs))


def load_fixture(path: str | Path) -> AugmentResult:
    """Offline path: parse a recorded chat-completion response body from disk."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return parse_reply(_reply_content(payload))


# --- review -----------------------------------------------------------------


def _bank_texts(bank_path: Path) -> set[str]:
    if not bank_path.exists():
        return set()
    texts = set()
    for raw in bank_path.read_text(encoding="utf-8").splitlines():
        if raw.strip():
            texts.add(template_text(parse_template(json.loads(raw)["template"])))
    return texts


def append_to_bank(templates: Sequence[Template], pattern_id: int, bank_path: str | Path) -> list[str]:
    """Append templates not already in the bank; returns the canonical texts added."""
    bank_path = Path(bank_path)
    existing = _bank_texts(bank_path)
    added = []
    with bank_path.open("a", encoding="utf-8") as f:
        for t in templates:
            text = template_text(t)
            if text in existing:
                continue
            existing.add(text)
            added.append(text)
            f.write(json.dumps({"pattern": pattern_id, "template": text}, ensure_ascii=False) + "\n")
    return added


@dataclass(frozen=True)
class ReviewOutcome:
    accepted: tuple[str, ...]
    duplicates: tuple[str, ...]
    pending: tuple[tuple[str, str], ...]  # still-rejected (line, reason)


def review_queue(
    result: AugmentResult,
    corrections: Mapping[int, str],
    pattern_id: int,
    bank_path: str | Path,
    audit_path: str | Path,
) -> ReviewOutcome:
    """Apply hand corrections to rejected lines.

    ``corrections`` maps an index into ``result.rejected`` to the fixed line.
    Each attempt is appended to the audit log; corrections that validate and
    are not already present go to the bank, the rest stay pending.
    """
    bank_path = Path(bank_path)
    existing = _bank_texts(bank_path)
    accepted: list[str] = []
    duplicates: list[str] = []
    pending: list[tuple[str, str]] = []
    audit: list[dict] = []
    for idx, (line, reason) in enumerate(result.rejected):
        if idx not in corrections:
            pending.append((line, reason))
            continue
        fixed = corrections[idx]
        record = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "original": line,
            "original_reason": reason,
            "correction": fixed,
        }
        try:
            text = template_text(validate_template_line(fixed))
        except TemplateError as exc:
            pending.append((fixed, str(exc)))
            record["status"] = f"rejected: {exc}"
        else:
            if text in existing:
                duplicates.append(text)
                record["status"] = "duplicate"
            else:
                existing.add(text)
                accepted.append(text)
                record["status"] = "accepted"
        audit.append(record)

    if accepted:
        with bank_path.open("a", encoding="utf-8") as f:
            for text in accepted:
                f.write(json.dumps({"pattern": pattern_id, "template": text}, ensure_ascii=False) + "\n")
    if audit:
        with Path(audit_path).open("a", encoding="utf-8") as f:
            for rec in audit:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return ReviewOutcome(tuple(accepted), tuple(duplicates), tuple(pending))
