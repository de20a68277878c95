"""Chat-completion client with bounded retries and a token-bucket limiter."""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Callable, Optional

import httpx

from ..errors import AuthError, BackendError, EmptyCompletion, RateLimited, Transport
from .base import CompletionRequest

log = logging.getLogger(__name__)


class TokenBucket:
    """Classic token bucket: ``rate`` tokens per second, burst ``capacity``."""

    def __init__(self, rate: float, capacity: int = 1, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate <= 0 or capacity < 1:
            raise ValueError("rate must be > 0 and capacity >= 1")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = float(capacity)
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


class RemoteBackend:
    backend_id = "remote"

    def __init__(
        self,
        model: str = "gpt-4o",
        endpoint: str = "https://api.openai.com/v1/chat/completions",
        api_key_env: str = "OPENAI_API_KEY",
        max_attempts: int = 5,
        backoff: float = 1.0,
        max_backoff: float = 30.0,
        timeout: float = 60.0,
        requests_per_second: float = 5.0,
        max_in_flight: int = 8,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model_id = model
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.max_backoff = max_backoff
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._bucket = TokenBucket(requests_per_second, capacity=max_in_flight, sleep=sleep)
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    def close(self):
        self._client.close()

    def _payload(self, request: CompletionRequest) -> dict:
        body = {
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        return body

    def complete(self, request: CompletionRequest) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        headers = {"Authorization": f"Bearer {key}"}
        payload = self._payload(request)
        delay = self.backoff
        last_error: Exception = BackendError("no attempt made")
        for attempt in range(1, self.max_attempts + 1):
            self._bucket.acquire()
            with self._in_flight:
                try:
                    resp = self._client.post(self.endpoint, json=payload, headers=headers)
                except httpx.TransportError as exc:
                    resp = None
                    last_error = Transport(f"transport error: {exc}")
            if resp is not None:
                if resp.status_code in (401, 403):
                    raise AuthError(f"authentication failed ({resp.status_code})")
                if resp.status_code == 429:
                    last_error = RateLimited(f"rate limited after {attempt} attempts")
                elif resp.status_code >= 500:
                    last_error = Transport(f"server error {resp.status_code} after {attempt} attempts")
                elif resp.status_code >= 400:
                    raise BackendError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
                else:
                    return self._extract(resp)
            if attempt < self.max_attempts:
                log.warning("remote completion failed (%s); retrying in %.1fs", last_error, delay)
                self._sleep(delay)
                delay = min(delay * 2, self.max_backoff)
        raise last_error

    @staticmethod
    def _extract(resp: httpx.Response) -> str:
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        if not text or not text.strip():
            raise EmptyCompletion("backend returned an empty completion")
        return text
