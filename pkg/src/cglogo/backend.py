"""Answer sources: HTTP chat-completion services and an offline reasoner.

Two wire dialects are spoken directly over HTTPS+JSON: the local
OpenAI-style chat API (images embedded as base64 data URLs) and the
hosted Gemini-style API (images as inline media parts). Decoding is
pinned to temperature 0. Responses are cached on disk keyed by
(model, system, user, image digests) so interrupted runs resume without
re-querying.

The reference backend needs no network: it reads the 13 symbolic blocks
back out of the user prompt and classifies the query by mean Jaccard
similarity of action-token sets against each support class. Using token
sets (not sequences) is deliberate: it is a floor baseline that query
sequence permutation cannot hurt, which documents by contrast what
structure-sensitivity means for real models.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .dataset import BongardProblem
from .describe import parse_description
from .grammar import BongardImage, parse_image, serialize_image
from .prompt import USER_CLOSING, PromptBundle


class BackendError(Exception):
    pass


class TransportError(BackendError):
    pass


class Timeout(TransportError):
    pass


class RateLimited(TransportError):
    pass


class AuthMissing(BackendError):
    pass


class UnsupportedModality(BackendError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # http-openai-style | http-gemini-style | reference
    model: str = "reference-jaccard"
    endpoint: str = ""
    api_key_env: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 2048
    timeout_s: float = 60.0
    max_retries: int = 3
    max_inflight: int = 4
    supports_images: bool | None = None  # default: False for reference, else True
    cache_dir: str | None = None
    cache_bypass: bool = False

    def __post_init__(self):
        if self.kind not in ("http-openai-style", "http-gemini-style", "reference"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")

    @property
    def images_ok(self) -> bool:
        if self.supports_images is None:
            return self.kind != "reference"
        return self.supports_images

    @classmethod
    def from_dict(cls, doc: dict) -> "BackendConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown backend config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class RawAnswer:
    text: str
    latency_s: float
    status: int = 200
    retries: int = 0
    cached: bool = False

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


class ResponseCache:
    """Content-addressed answer store; concurrent readers, atomic writes."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(model: str, system: str, user: str, image_digests: list[str]) -> str:
        doc = json.dumps(
            {"model": model, "system": system, "user": user, "images": image_digests},
            sort_keys=True,
        )
        return hashlib.sha256(doc.encode()).hexdigest()

    def get(self, key: str) -> RawAnswer | None:
        path = self.root / f"{key}.json"
        if not path.exists():
            return None
        doc = json.loads(path.read_text(encoding="utf-8"))
        return RawAnswer(
            text=doc["text"],
            latency_s=doc["latency_s"],
            status=doc["status"],
            retries=doc["retries"],
            cached=True,
        )

    def put(self, key: str, answer: RawAnswer) -> None:
        doc = {
            "text": answer.text,
            "latency_s": answer.latency_s,
            "status": answer.status,
            "retries": answer.retries,
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, self.root / f"{key}.json")


def _default_transport(url: str, headers: dict, payload: dict, timeout: float):
    resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    return resp.status_code, resp.text


class HttpBackend:
    """Blocking chat-completion client with retries and an in-flight cap."""

    RETRY_STATUSES = {429, 500, 502, 503, 504}
    BACKOFF_BASE = 0.5
    BACKOFF_CAP = 8.0

    def __init__(self, config: BackendConfig, transport=None, sleeper=time.sleep):
        self.config = config
        self._transport = transport or _default_transport
        self._sleep = sleeper
        self._sem = threading.BoundedSemaphore(config.max_inflight)
        self._cache = ResponseCache(config.cache_dir) if config.cache_dir else None

    def _api_key(self) -> str | None:
        env = self.config.api_key_env
        if not env:
            return None
        key = os.environ.get(env)
        if not key:
            raise AuthMissing(f"environment variable {env} is not set")
        return key

    def _encode_images(self, bundle: PromptBundle) -> list[tuple[str, str]]:
        """(base64 payload, sha256 digest) per attachment, in order."""
        encoded = []
        for att in bundle.images:
            data = Path(att.path).read_bytes()
            encoded.append(
                (base64.b64encode(data).decode("ascii"), hashlib.sha256(data).hexdigest())
            )
        return encoded

    def _build_request(self, bundle: PromptBundle, images_b64: list[str]):
        cfg = self.config
        key = self._api_key()
        if cfg.kind == "http-openai-style":
            content: object = bundle.user
            if images_b64:
                content = [{"type": "text", "text": bundle.user}] + [
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{b64}"},
                    }
                    for b64 in images_b64
                ]
            payload = {
                "model": cfg.model,
                "messages": [
                    {"role": "system", "content": bundle.system},
                    {"role": "user", "content": content},
                ],
                "temperature": cfg.temperature,
                "max_tokens": cfg.max_output_tokens,
                "stream": False,
            }
            headers = {"Content-Type": "application/json"}
            if key:
                headers["Authorization"] = f"Bearer {key}"
            return cfg.endpoint, headers, payload
        # Gemini-style hosted API.
        parts: list[dict] = [{"text": bundle.user}]
        parts += [
            {"inlineData": {"mimeType": "image/png", "data": b64}} for b64 in images_b64
        ]
        payload = {
            "systemInstruction": {"parts": [{"text": bundle.system}]},
            "contents": [{"role": "user", "parts": parts}],
            "generationConfig": {
                "temperature": cfg.temperature,
                "maxOutputTokens": cfg.max_output_tokens,
            },
        }
        url = f"{self.config.endpoint.rstrip('/')}/models/{cfg.model}:generateContent"
        headers = {"Content-Type": "application/json"}
        if key:
            headers["x-goog-api-key"] = key
        return url, headers, payload

    def _extract_text(self, body: str) -> str:
        try:
            doc = json.loads(body)
            if self.config.kind == "http-openai-style":
                return doc["choices"][0]["message"]["content"]
            parts = doc["candidates"][0]["content"]["parts"]
            return "".join(p["text"] for p in parts if "text" in p)
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as err:
            raise TransportError(f"malformed completion response: {err}") from err

    def complete(self, bundle: PromptBundle) -> RawAnswer:
        cfg = self.config
        if bundle.images and not cfg.images_ok:
            raise UnsupportedModality(f"backend {cfg.model} does not accept images")
        encoded = self._encode_images(bundle)
        cache_key = ResponseCache.key(
            cfg.model, bundle.system, bundle.user, [digest for _, digest in encoded]
        )
        if self._cache and not cfg.cache_bypass:
            hit = self._cache.get(cache_key)
            if hit is not None:
                return hit
        url, headers, payload = self._build_request(bundle, [b64 for b64, _ in encoded])

        last_error: BackendError | None = None
        start = time.monotonic()
        with self._sem:
            for attempt in range(cfg.max_retries + 1):
                if attempt:
                    self._sleep(min(self.BACKOFF_CAP, self.BACKOFF_BASE * 2 ** (attempt - 1)))
                try:
                    status, body = self._transport(url, headers, payload, cfg.timeout_s)
                except requests.Timeout as err:
                    last_error = Timeout(str(err))
                    continue
                except requests.RequestException as err:
                    last_error = TransportError(str(err))
                    continue
                if status in self.RETRY_STATUSES:
                    last_error = (
                        RateLimited(f"HTTP {status}") if status == 429
                        else TransportError(f"HTTP {status}")
                    )
                    continue
                if status != 200:
                    raise TransportError(f"HTTP {status}: {body[:200]}")
                answer = RawAnswer(
                    text=self._extract_text(body),
                    latency_s=time.monotonic() - start,
                    status=status,
                    retries=attempt,
                )
                if self._cache:
                    self._cache.put(cache_key, answer)
                return answer
        raise last_error if last_error else TransportError("no attempts made")


def _token_set(image: BongardImage) -> frozenset[str]:
    return frozenset(t for shape in serialize_image(image) for t in shape)


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


@dataclass(frozen=True)
class ReferenceVerdict:
    verdict: str  # "pos" | "neg"
    pos_score: float
    neg_score: float


def classify_token_sets(
    positives: list[frozenset[str]], negatives: list[frozenset[str]], query: frozenset[str]
) -> ReferenceVerdict:
    pos_score = sum(_jaccard(query, s) for s in positives) / len(positives)
    neg_score = sum(_jaccard(query, s) for s in negatives) / len(negatives)
    verdict = "pos" if pos_score > neg_score else "neg"  # ties go to neg
    return ReferenceVerdict(verdict, pos_score, neg_score)


def reference_classify(problem: BongardProblem, representation: str = "ap") -> ReferenceVerdict:
    """Deterministic floor baseline: mean Jaccard over action-token sets.

    The verdict is a pure function of the problem; the representation
    argument only mirrors the run condition (token sets are the same
    either way).
    """
    if representation not in ("ap", "ad"):
        raise ValueError("reference reasoner handles symbolic representations only")
    return classify_token_sets(
        [_token_set(img) for img in problem.positives],
        [_token_set(img) for img in problem.negatives],
        _token_set(problem.query),
    )


def _parse_symbolic_items(block: str) -> list[frozenset[str]]:
    block = block.strip("\n")
    if block.startswith("["):
        items = []
        for line in block.split("\n"):
            line = line.strip()
            if not line:
                continue
            nested = json.loads(line)
            items.append(_token_set(parse_image(nested)))
        return items
    return [
        _token_set(parse_description(chunk))
        for chunk in block.split("\n\n")
        if chunk.strip()
    ]


def _split_sections(user: str) -> tuple[str, str, str]:
    try:
        _, rest = user.split("POSITIVE SET (6 descriptions):\n", 1)
        pos, rest = rest.split("\n\nNEGATIVE SET (6 descriptions):\n", 1)
        neg, rest = rest.split("\n\nQUERY (1 description):\n", 1)
        query = rest.split(f"\n\n{USER_CLOSING}", 1)[0]
    except ValueError as err:
        raise BackendError(f"user prompt does not follow the fixed layout: {err}") from err
    return pos, neg, query


class ReferenceBackend:
    """Offline answer source consuming the same prompts a model would."""

    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, bundle: PromptBundle) -> RawAnswer:
        if bundle.images and not self.config.images_ok:
            raise UnsupportedModality("reference backend is text-only")
        start = time.monotonic()
        pos_block, neg_block, query_block = _split_sections(bundle.user)
        positives = _parse_symbolic_items(pos_block)
        negatives = _parse_symbolic_items(neg_block)
        queries = _parse_symbolic_items(query_block)
        if len(queries) != 1:
            raise BackendError(f"expected one query block, found {len(queries)}")
        result = classify_token_sets(positives, negatives, queries[0])
        text = json.dumps(
            {
                "Analysis": (
                    f"Mean token-set similarity: pos={result.pos_score:.6f}, "
                    f"neg={result.neg_score:.6f}."
                ),
                "Rule": "Query is closer (token-set Jaccard) to one support class.",
                "Test Image": "Compared against all 12 support token sets.",
                "Conclusion": result.verdict,
            }
        )
        return RawAnswer(text=text, latency_s=time.monotonic() - start)


def make_backend(config: BackendConfig, transport=None):
    if config.kind == "reference":
        return ReferenceBackend(config)
    return HttpBackend(config, transport=transport)
