"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class GabmError(Exception):
    """Base class for all engine errors."""


# agent core

class CycleDetected(GabmError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__(f"dependency cycle: {' -> '.join(self.cycle)}")


class UnknownDependency(GabmError):
    def __init__(self, component, missing):
        self.component = component
        self.missing = missing
        super().__init__(f"component {component!r} depends on unknown {missing!r}")


class TemplateError(GabmError):
    def __init__(self, placeholder, template_id=None):
        self.placeholder = placeholder
        self.template_id = template_id
        where = f" in {template_id!r}" if template_id else ""
        super().__init__(f"unresolved placeholder {{{placeholder}}}{where}")


class MissingState(GabmError):
    def __init__(self, component):
        self.component = component
        super().__init__(f"no state for component {component!r}")


class UnparseableDecision(GabmError):
    def __init__(self, attempts, kind):
        self.attempts = list(attempts)
        self.kind = kind
        super().__init__(f"could not parse a {kind} decision after {len(self.attempts)} attempts")


class BoundsViolation(GabmError):
    pass


class ConfigError(GabmError):
    pass


class ValidationError(GabmError):
    def __init__(self, field, persona=None, message=None):
        self.field = field
        self.persona = persona
        who = f" (persona {persona!r})" if persona else ""
        super().__init__(message or f"invalid field {field!r}{who}")


# backends

class BackendError(GabmError):
    component = None


class AuthError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class Transport(BackendError):
    pass


class EmptyCompletion(BackendError):
    pass


class CacheMiss(BackendError):
    pass


class UnsupportedQuestionKind(BackendError):
    pass


class StorageError(GabmError):
    pass


class ConflictError(StorageError):
    pass


# stats

class StatsError(GabmError, ValueError):
    pass


class DegenerateVariance(StatsError):
    pass


class ConstantRegressor(StatsError):
    pass


class ZeroMarginal(StatsError):
    pass


class InvalidDf(StatsError):
    pass


# harness

class ConfigMismatch(GabmError):
    pass


class MissingAnalysis(GabmError):
    pass
