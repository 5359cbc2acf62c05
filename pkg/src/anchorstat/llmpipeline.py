"""Corpus construction against chat-completion and embedding endpoints.

Every (input, temperature, template, model) result is cached on disk by
content hash, so a rerun with a warm cache performs zero network calls
and the pipeline can resume after partial failures. The HTTP transport
is injectable, which keeps the module testable without a live endpoint.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import EmbeddingMatrix, normalize_rows
from .errors import ParameterError, TransportError

Transport = Callable[[str, dict, dict, float], dict]

DEFAULT_PROMPT_TEMPLATE = "Paraphrase the following text:\n\n{text}"

CHAIN_ROLES = ("G", "Gprime", "S")


def _requests_transport(url: str, headers: dict, payload: dict, timeout_s: float) -> dict:
    import requests

    resp = requests.post(url, headers=headers, json=payload, timeout=timeout_s)
    resp.raise_for_status()
    return resp.json()


@dataclass
class ClientConfig:
    """Endpoint, credential and cache settings for corpus construction."""

    base_url: str = "http://localhost:8000/v1"
    chat_model: str = "paraphrase-model"
    embed_model: str = "embedding-model"
    api_key_env: str = "LLM_API_KEY"
    cache_dir: Path | str = ".anchorstat-cache"
    concurrency: int = 4
    max_retries: int = 3
    backoff_s: float = 0.5
    timeout_s: float = 60.0
    embed_batch_size: int = 128
    transport: Transport = field(default=_requests_transport, repr=False)

    def headers(self) -> dict:
        key = os.environ.get(self.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers


@dataclass(frozen=True)
class ParaphraseJob:
    """One batch of texts to paraphrase at a fixed temperature."""

    texts: tuple[str, ...]
    temperature: float
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    model: str = ""
    chain_role: str = "G"

    def __post_init__(self):
        object.__setattr__(self, "texts", tuple(self.texts))
        if not 0.0 <= self.temperature <= 2.0:
            raise ParameterError(
                f"temperature must be in [0, 2], got {self.temperature}"
            )
        if self.chain_role not in CHAIN_ROLES:
            raise ParameterError(f"chain_role must be one of {CHAIN_ROLES}")
        if "{text}" not in self.prompt_template:
            raise ParameterError("prompt_template must contain '{text}'")


def _cache_key(kind: str, **fields) -> str:
    blob = json.dumps({"kind": kind, **fields}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _cache_path(cache_dir: Path, key: str) -> Path:
    return cache_dir / key[:2] / f"{key}.json"


def _cache_read(cache_dir: Path, key: str):
    path = _cache_path(cache_dir, key)
    if not path.exists():
        return None
    return json.loads(path.read_text())["output"]


def _cache_write(cache_dir: Path, key: str, output) -> None:
    path = _cache_path(cache_dir, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"output": output}, sort_keys=True))
    os.replace(tmp, path)  # atomic on POSIX


def _call_with_retries(config: ClientConfig, url: str, payload: dict):
    last_exc: Exception | None = None
    for attempt in range(config.max_retries):
        try:
            return config.transport(url, config.headers(), dict(payload), config.timeout_s)
        except Exception as exc:  # transport failures are provider-specific
            last_exc = exc
            if attempt + 1 < config.max_retries:
                time.sleep(config.backoff_s * (2**attempt))
    raise TransportError(f"request to {url} failed after {config.max_retries} attempts: {last_exc}")


def paraphrase_batch(job: ParaphraseJob, config: ClientConfig) -> list[str]:
    """Paraphrase every text in the job; output i pairs with input i.

    Completed items are cached immediately, so a failed run leaves its
    partial results behind and a rerun only retries the gaps.
    """
    cache_dir = Path(config.cache_dir)
    model = job.model or config.chat_model
    keys = [
        _cache_key(
            "chat",
            model=model,
            temperature=job.temperature,
            template=job.prompt_template,
            text=text,
        )
        for text in job.texts
    ]
    results: list[str | None] = [_cache_read(cache_dir, k) for k in keys]
    pending = [i for i, r in enumerate(results) if r is None]
    if not pending:
        return [str(r) for r in results]

    url = config.base_url.rstrip("/") + "/chat/completions"

    def fetch(i: int):
        payload = {
            "model": model,
            "temperature": job.temperature,
            "messages": [
                {
                    "role": "user",
                    "content": job.prompt_template.format(text=job.texts[i]),
                }
            ],
        }
        doc = _call_with_retries(config, url, payload)
        return i, str(doc["choices"][0]["message"]["content"])

    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        for future in [pool.submit(fetch, i) for i in pending]:
            try:
                i, text = future.result()
            except TransportError:
                continue
            results[i] = text
            _cache_write(cache_dir, keys[i], text)
    failures = [i for i, r in enumerate(results) if r is None]
    if failures:
        raise TransportError(
            f"paraphrase job failed for indices {failures}; completed items are cached"
        )
    return [str(r) for r in results]


def embed_batch(texts: Sequence[str], config: ClientConfig) -> EmbeddingMatrix:
    """Embed every text; row i embeds text i, rows unit-normalized.

    Cached per text hash; only uncached texts touch the endpoint.
    """
    texts = list(texts)
    cache_dir = Path(config.cache_dir)
    keys = [_cache_key("embed", model=config.embed_model, text=t) for t in texts]
    vectors: list[list[float] | None] = [_cache_read(cache_dir, k) for k in keys]
    pending = [i for i, v in enumerate(vectors) if v is None]

    url = config.base_url.rstrip("/") + "/embeddings"
    for start in range(0, len(pending), config.embed_batch_size):
        chunk = pending[start : start + config.embed_batch_size]
        payload = {"model": config.embed_model, "input": [texts[i] for i in chunk]}
        doc = _call_with_retries(config, url, payload)
        rows = sorted(doc["data"], key=lambda d: d["index"])
        if len(rows) != len(chunk):
            raise TransportError(
                f"endpoint returned {len(rows)} embeddings for {len(chunk)} inputs"
            )
        for local, item in zip(chunk, rows):
            vec = [float(v) for v in item["embedding"]]
            vectors[local] = vec
            _cache_write(cache_dir, keys[local], vec)
    matrix = EmbeddingMatrix(values=np.asarray(vectors, dtype=float), label="embedded")
    return normalize_rows(matrix)
