"""Persistent, append-only prompt -> completion store and the
record/replay backend built on it."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..errors import CacheMiss, ConflictError, StorageError
from ..util import canonical_json
from .base import CompletionRequest


def cache_key(backend_id: str, model_id: str, temperature: float, prompt: str,
              seed: Optional[int] = None, system: str = "") -> str:
    payload = canonical_json({
        "backend": backend_id,
        "model": model_id,
        "temperature": float(temperature),
        "seed": seed,
        "system": system,
        "prompt": prompt,
    })
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def request_key(backend_id: str, model_id: str, request: CompletionRequest) -> str:
    return cache_key(backend_id, model_id, request.temperature, request.prompt,
                     request.seed, request.system)


@dataclass(frozen=True)
class CacheEntry:
    key: str
    response: str
    created_at: str = ""


class ResponseCache:
    """JSONL file keyed by digest. Entries are immutable: re-storing a key
    with different text raises :class:`ConflictError`."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        try:
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    key, text = rec["key"], rec["response"]
                    if key in self._entries and self._entries[key] != text:
                        raise ConflictError(f"{self.path}:{lineno}: conflicting entry for {key}")
                    self._entries[key] = text
        except (OSError, ValueError, KeyError) as exc:
            raise StorageError(f"cannot read cache {self.path}: {exc}") from exc

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def lookup(self, key: str) -> Optional[str]:
        return self._entries.get(key)

    def store(self, entry: CacheEntry) -> CacheEntry:
        with self._lock:
            existing = self._entries.get(entry.key)
            if existing is not None:
                if existing != entry.response:
                    raise ConflictError(f"cache entry {entry.key} already holds different text")
                return entry
            created = entry.created_at or datetime.now(timezone.utc).isoformat()
            line = json.dumps({"key": entry.key, "response": entry.response, "created_at": created},
                              ensure_ascii=False)
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
            except OSError as exc:
                raise StorageError(f"cannot append to cache {self.path}: {exc}") from exc
            self._entries[entry.key] = entry.response
            return CacheEntry(entry.key, entry.response, created)


class RecordReplayBackend:
    """Wraps a backend with a :class:`ResponseCache`.

    ``mode="record"`` serves hits from the cache and records misses;
    ``mode="replay"`` never calls the inner backend and raises
    :class:`CacheMiss` on a missing key.
    """

    def __init__(self, cache: ResponseCache, inner=None, mode: str = "record",
                 backend_id: Optional[str] = None, model_id: Optional[str] = None):
        if mode not in ("record", "replay"):
            raise ValueError(f"unknown cache mode {mode!r}")
        if mode == "record" and inner is None:
            raise ValueError("record mode needs an inner backend")
        self.cache = cache
        self.inner = inner
        self.mode = mode
        self.backend_id = backend_id or inner.backend_id
        self.model_id = model_id or inner.model_id
        self.hits = 0
        self.misses = 0

    def complete(self, request: CompletionRequest) -> str:
        key = request_key(self.backend_id, self.model_id, request)
        text = self.cache.lookup(key)
        if text is not None:
            self.hits += 1
            return text
        self.misses += 1
        if self.mode == "replay":
            raise CacheMiss(f"no recorded completion for key {key}")
        text = self.inner.complete(request)
        self.cache.store(CacheEntry(key, text))
        return text
