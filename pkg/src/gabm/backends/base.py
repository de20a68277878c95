from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

DEFAULT_SYSTEM = (
    "You are taking part in an economic decision-making study. "
    "Stay in character and answer the question you are asked."
)


@dataclass(frozen=True)
class CompletionRequest:
    """One prompt sent to a backend.

    ``meta`` carries structured side information (agent, persona, question
    kind, game features). Remote backends ignore it and it is not part of
    the cache key; only the scripted policy reads it.
    """

    prompt: str
    temperature: float = 1.0
    max_tokens: int = 512
    seed: Optional[int] = None
    system: str = DEFAULT_SYSTEM
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.prompt, str) or not self.prompt.strip():
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@runtime_checkable
class DecisionBackend(Protocol):
    backend_id: str
    model_id: str

    def complete(self, request: CompletionRequest) -> str:
        ...
