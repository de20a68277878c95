from __future__ import annotations

from .base import CompletionRequest, DecisionBackend
from .cache import CacheEntry, RecordReplayBackend, ResponseCache, cache_key, request_key
from .remote import RemoteBackend, TokenBucket
from .scripted import CONDITION_BONUS, ScriptedBackend, ScriptedPolicy, scripted_decide

BACKENDS = ("scripted", "remote")


def make_backend(name: str, **options):
    """Build a backend by its configuration name."""
    if name == "scripted":
        return ScriptedBackend(**options)
    if name == "remote":
        return RemoteBackend(**options)
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


__all__ = [
    "BACKENDS",
    "CONDITION_BONUS",
    "CacheEntry",
    "CompletionRequest",
    "DecisionBackend",
    "RecordReplayBackend",
    "RemoteBackend",
    "ResponseCache",
    "ScriptedBackend",
    "ScriptedPolicy",
    "TokenBucket",
    "cache_key",
    "make_backend",
    "request_key",
    "scripted_decide",
]
