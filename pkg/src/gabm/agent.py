"""Generative agents built from a dependency graph of cognitive components.

Each component renders its prompt from the agent's memory and the latest
outputs of the components it depends on; the decision call sees the
concatenated outputs of the components wired into the action step.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import yaml

from .backends.base import CompletionRequest
from .errors import (
    BackendError,
    BoundsViolation,
    ConfigError,
    CycleDetected,
    MissingState,
    TemplateError,
    UnknownDependency,
    UnparseableDecision,
)
from .personas import Persona
from .seeding import derive_seed
from .util import round_half_up

OBSERVATION_SUMMARY = "ObservationSummary"
SITUATION_ASSESSMENT = "SituationAssessment"
ARCHITECTURE_NAMES = ("Base", "Social", "SocialStrategic", "SocialEmotion", "PersonaOnly", "NoToMNoPersona")
MAX_RETRIES = 2


# graph ---------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentSpec:
    id: str
    prompt_template: str
    deps: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "deps", tuple(self.deps))


@dataclass(frozen=True)
class ArchitectureConfig:
    name: str
    components: Tuple[ComponentSpec, ...]
    action_deps: Tuple[str, ...]
    decision_template: str = (
        "Based on the above context about the situation and {persona.name}, think step by step "
        "about what {persona.name} will decide in the current situation: {question}."
    )
    study: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "action_deps", tuple(self.action_deps))

    @property
    def component_ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.components)

    def component(self, cid: str) -> ComponentSpec:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def validate(self) -> "ArchitectureConfig":
        ids = self.component_ids
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ConfigError(f"{self.name}: duplicate component id {dup!r}")
        if OBSERVATION_SUMMARY not in ids:
            raise ConfigError(f"{self.name}: every architecture needs {OBSERVATION_SUMMARY}")
        for a in self.action_deps:
            if a not in ids:
                raise UnknownDependency("action", a)
        if self.name == "Base" and set(ids) != {OBSERVATION_SUMMARY, SITUATION_ASSESSMENT}:
            raise ConfigError("Base must contain exactly ObservationSummary and SituationAssessment")
        topo_order(self)
        return self

    def fingerprint(self) -> dict:
        return {
            "name": self.name,
            "study": self.study,
            "components": [
                {"id": c.id, "deps": list(c.deps), "template": c.prompt_template} for c in self.components
            ],
            "action_deps": list(self.action_deps),
            "decision_template": self.decision_template,
        }


def _find_cycle(remaining: Sequence[str], deps: Mapping[str, Sequence[str]]) -> List[str]:
    rem = set(remaining)
    for start in remaining:
        path, index = [], {}
        node = start
        while node not in index:
            index[node] = len(path)
            path.append(node)
            nxt = [d for d in deps[node] if d in rem]
            if not nxt:
                break
            node = nxt[0]
        else:
            return path[index[node]:]
    return list(remaining)


def topo_order(config) -> List[str]:
    """Dependency-respecting evaluation order.

    Ties are broken by declaration order, so the result is a pure function
    of the configuration.
    """
    specs = config.components if hasattr(config, "components") else config
    declared = [c.id for c in specs]
    deps = {c.id: tuple(c.deps) for c in specs}
    for c in specs:
        for d in c.deps:
            if d not in deps:
                raise UnknownDependency(c.id, d)
    done: List[str] = []
    placed = set()
    while len(done) < len(declared):
        for cid in declared:
            if cid not in placed and all(d in placed for d in deps[cid]):
                done.append(cid)
                placed.add(cid)
                break
        else:
            raise CycleDetected(_find_cycle([c for c in declared if c not in placed], deps))
    return done


# loading -------------------------------------------------------------------

def _data_path(name: str) -> Path:
    return Path(str(resources.files("gabm") / "data" / name))


def load_prompts(path=None) -> dict:
    with open(path or _data_path("prompts.yaml"), encoding="utf-8") as fh:
        return yaml.safe_load(fh)


def load_architectures(study: str, path=None, prompts_path=None) -> Dict[str, ArchitectureConfig]:
    """Parse the architecture file for ``study`` into validated configs."""
    with open(path or _data_path("architectures.yaml"), encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if study not in doc:
        raise ConfigError(f"no architectures defined for study {study!r}")
    prompts = load_prompts(prompts_path).get(study, {})
    section = doc[study]
    specs = {}
    for cid, body in section.get("components", {}).items():
        body = body or {}
        template = body.get("prompt_template") or prompts.get(body.get("template", cid))
        if template is None:
            raise ConfigError(f"no prompt template for component {cid!r} in study {study!r}")
        specs[cid] = ComponentSpec(cid, template, tuple(body.get("deps", ())))
    decision = prompts.get("Decision")
    configs = {}
    for name, body in section.get("architectures", {}).items():
        if isinstance(body, list):
            body = {"components": body}
        missing = [c for c in body["components"] if c not in specs]
        if missing:
            raise UnknownDependency(name, missing[0])
        cfg = ArchitectureConfig(
            name=name,
            components=tuple(specs[c] for c in body["components"]),
            action_deps=tuple(body.get("action_deps", body["components"])),
            study=study,
            **({"decision_template": decision} if decision else {}),
        )
        configs[name] = cfg.validate()
    return configs


def load_architecture(name: str, study: str, path=None) -> ArchitectureConfig:
    configs = load_architectures(study, path)
    if name not in configs:
        raise ConfigError(f"unknown architecture {name!r} for {study}; known: {sorted(configs)}")
    return configs[name]


# templates -----------------------------------------------------------------

class _StrictFormatter(string.Formatter):
    def get_field(self, field_name, args, kwargs):
        try:
            return super().get_field(field_name, args, kwargs)
        except (KeyError, AttributeError, IndexError):
            raise TemplateError(field_name) from None


_FORMATTER = _StrictFormatter()


def render_template(template: str, template_id: Optional[str] = None, **values) -> str:
    try:
        return _FORMATTER.format(template, **values)
    except TemplateError as exc:
        raise TemplateError(exc.placeholder, template_id) from None


# memory and state ----------------------------------------------------------

@dataclass
class Memory:
    entries: List[Tuple[int, str]] = field(default_factory=list)

    def add(self, text: str, timestamp: Optional[int] = None) -> None:
        if timestamp is None:
            timestamp = self.entries[-1][0] + 1 if self.entries else 0
        elif self.entries and timestamp < self.entries[-1][0]:
            raise ValueError("memory is append-only; timestamps must not decrease")
        self.entries.append((timestamp, text))

    def texts(self) -> List[str]:
        return [t for _, t in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def render(self) -> str:
        if not self.entries:
            return "Observations so far: none."
        lines = "\n".join(f"[{ts}] {text}" for ts, text in self.entries)
        return f"Observations so far:\n{lines}"


@dataclass
class ComponentState:
    component_id: str
    text: str = ""
    step: int = 0

    def update(self, text: str) -> None:
        if not text:
            raise ValueError(f"empty output for component {self.component_id}")
        self.text = text
        self.step += 1


def tag_block(cid: str, text: str) -> str:
    return f"### {cid}\n{text}"


def update_component(
    component: ComponentSpec,
    dep_outputs: Mapping[str, str],
    memory: Memory,
    backend,
    seed: Optional[int],
    *,
    agent_name: str,
    persona: Optional[Persona] = None,
    question: str = "",
    temperature: float = 1.0,
    meta: Optional[dict] = None,
) -> str:
    """One component step: memory block + dependency outputs + template."""
    missing = [d for d in component.deps if d not in dep_outputs]
    if missing:
        raise MissingState(missing[0])
    extra = set(dep_outputs) - set(component.deps)
    if extra:
        raise ValueError(f"{component.id}: unexpected dependency outputs {sorted(extra)}")
    body = render_template(component.prompt_template, component.id,
                           agent_name=agent_name, persona=persona, question=question)
    parts = [memory.render()]
    parts.extend(tag_block(d, dep_outputs[d]) for d in component.deps)
    parts.append(body)
    request_meta = dict(meta or {})
    request_meta.update(
        purpose="component",
        component=component.id,
        agent=agent_name,
        persona=persona.to_dict() if persona else {},
        memory=memory.texts(),
    )
    request = CompletionRequest("\n\n".join(parts), temperature=temperature, seed=seed, meta=request_meta)
    try:
        text = backend.complete(request)
    except BackendError as exc:
        exc.component = component.id
        raise
    if component.id == OBSERVATION_SUMMARY:
        # the summary is prefixed by the full observation list
        text = f"{memory.render()}\nSummary: {text}"
    return text


@dataclass(frozen=True)
class ActionContext:
    agent_name: str
    question: str
    assembled: str
    blocks: Tuple[Tuple[str, str], ...] = ()


def assemble_action_context(
    config: ArchitectureConfig,
    states: Mapping[str, ComponentState],
    question: str,
    *,
    agent_name: str = "",
    persona: Optional[Persona] = None,
) -> ActionContext:
    blocks = []
    for cid in config.action_deps:
        state = states.get(cid)
        if state is None or not state.text:
            raise MissingState(cid)
        blocks.append((cid, state.text))
    reflection = render_template(config.decision_template, "Decision",
                                 agent_name=agent_name, persona=persona, question=question)
    assembled = "\n\n".join([tag_block(c, t) for c, t in blocks] + [reflection])
    return ActionContext(agent_name, question, assembled, tuple(blocks))


# action spaces and parsing -------------------------------------------------

_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")
ABSTAIN_WORDS = ("abstain", "no vote", "nobody", "no one")


@dataclass(frozen=True)
class ActionSpace:
    kind: str
    max_value: int = 0
    options: Tuple[Tuple[str, Any], ...] = ()
    candidates: Tuple[str, ...] = ()
    clamp: bool = True
    answer_format: str = ""

    KINDS = ("binary", "amount", "text", "vote", "none")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown action space {self.kind!r}")

    @classmethod
    def binary(cls, yes: str, no: str, yes_aliases=(), no_aliases=()) -> "ActionSpace":
        opts = tuple((w, True) for w in (yes, *yes_aliases)) + tuple((w, False) for w in (no, *no_aliases))
        return cls("binary", options=opts, answer_format=f"{yes} or {no}")

    @classmethod
    def amount(cls, max_value: int, unit: str = "$", clamp: bool = True) -> "ActionSpace":
        return cls("amount", max_value=int(max_value), clamp=clamp,
                   answer_format=f"a whole number from 0 to {int(max_value)}")

    @classmethod
    def text(cls, answer_format: str = "your message") -> "ActionSpace":
        return cls("text", answer_format=answer_format)

    @classmethod
    def vote(cls, candidates: Iterable[str]) -> "ActionSpace":
        cands = tuple(candidates)
        return cls("vote", candidates=cands,
                   answer_format="the name of one of " + ", ".join(cands) + ", or abstain")

    @classmethod
    def none(cls) -> "ActionSpace":
        return cls("none")

    def contains(self, value) -> bool:
        if self.kind == "binary":
            return isinstance(value, bool)
        if self.kind == "amount":
            return isinstance(value, int) and 0 <= value <= self.max_value
        if self.kind == "vote":
            return value is None or value in self.candidates
        if self.kind == "text":
            return isinstance(value, str)
        return value is None


class _NoParse(Exception):
    pass


def _last_alternative(text: str, words: Sequence[str]):
    words = sorted(set(words), key=len, reverse=True)
    pattern = re.compile(r"(?<!\w)(" + "|".join(re.escape(w) for w in words) + r")(?!\w)", re.IGNORECASE)
    matches = list(pattern.finditer(text))
    if not matches:
        raise _NoParse
    return matches[-1].group(1)


def parse_decision(text: str, space: ActionSpace):
    """Tolerant extraction: the last number / last keyword wins."""
    if space.kind == "none":
        return None
    if space.kind == "text":
        return text.strip()
    if space.kind == "amount":
        found = _NUMBER.findall(text.replace(",", ""))
        if not found:
            raise _NoParse
        try:
            value = round_half_up(float(Decimal(found[-1])))
        except (InvalidOperation, ValueError):
            raise _NoParse from None
        if not 0 <= value <= space.max_value:
            if not space.clamp:
                raise BoundsViolation(f"{value} outside [0, {space.max_value}]")
            value = min(max(value, 0), space.max_value)
        return value
    if space.kind == "binary":
        lookup = {w.lower(): v for w, v in space.options}
        return lookup[_last_alternative(text, list(lookup)).lower()]
    if space.kind == "vote":
        by_lower = {c.lower(): c for c in space.candidates}
        hit = _last_alternative(text, list(space.candidates) + list(ABSTAIN_WORDS)).lower()
        return by_lower.get(hit)
    raise ValueError(space.kind)


@dataclass
class Decision:
    value: Any
    kind: str
    raw: str
    attempts: List[str] = field(default_factory=list)


def _decision_prompt(context: ActionContext, space: ActionSpace) -> str:
    return f"{context.assembled}\nAnswer with exactly: {space.answer_format}"


def decide(
    context: ActionContext,
    action_space: ActionSpace,
    backend,
    seed: Optional[int],
    *,
    temperature: float = 1.0,
    max_retries: int = MAX_RETRIES,
    meta: Optional[dict] = None,
) -> Decision:
    if action_space.kind == "none":
        return Decision(None, "none", "")
    base_prompt = _decision_prompt(context, action_space)
    prompt = base_prompt
    attempts: List[str] = []
    request_meta = dict(meta or {}, purpose="decision", agent=context.agent_name)
    for attempt in range(max_retries + 1):
        attempt_seed = None if seed is None else derive_seed(seed, "attempt", attempt)
        text = backend.complete(
            CompletionRequest(prompt, temperature=temperature, seed=attempt_seed, meta=request_meta)
        )
        attempts.append(text)
        try:
            value = parse_decision(text, action_space)
        except _NoParse:
            prompt = (
                f"{base_prompt}\n\nYour previous answer could not be read: {text.strip()[:200]!r}\n"
                f"Reply again. Answer with exactly: {action_space.answer_format}"
            )
            continue
        return Decision(value, action_space.kind, text, attempts)
    raise UnparseableDecision(attempts, action_space.kind)


# agent ---------------------------------------------------------------------

EventSink = Callable[[dict], None]


class Agent:
    """Memory + component states + architecture, bound to one game."""

    def __init__(
        self,
        name: str,
        persona: Persona,
        config: ArchitectureConfig,
        backend,
        *,
        temperature: float = 1.0,
        max_retries: int = MAX_RETRIES,
        sink: Optional[EventSink] = None,
    ):
        self.name = name
        self.persona = persona
        self.config = config
        self.backend = backend
        self.temperature = temperature
        self.max_retries = max_retries
        self.memory = Memory()
        self.states: Dict[str, ComponentState] = {}
        self.order = topo_order(config)
        self._sink = sink or (lambda event: None)

    def _emit(self, **event):
        self._sink(dict(event, agent=self.name))

    def observe(self, text: str, **tags) -> None:
        self.memory.add(text)
        self._emit(type="observation", text=text, **tags)

    def refresh(self, seed: int, question: str = "", meta: Optional[dict] = None) -> None:
        for cid in self.order:
            spec = self.config.component(cid)
            deps = {d: self.states[d].text for d in spec.deps}
            text = update_component(
                spec, deps, self.memory, self.backend, derive_seed(seed, cid),
                agent_name=self.name, persona=self.persona, question=question,
                temperature=self.temperature, meta=meta,
            )
            state = self.states.setdefault(cid, ComponentState(cid))
            state.update(text)
            self._emit(type="component", component=cid, step=state.step, text=text)

    def act(self, question: str, space: ActionSpace, seed: int, *,
            question_kind: str, features: Optional[dict] = None) -> Decision:
        meta = {"question_kind": question_kind, "features": dict(features or {}),
                "persona": self.persona.to_dict()}
        self.refresh(seed, question, meta)
        context = assemble_action_context(self.config, self.states, question,
                                          agent_name=self.name, persona=self.persona)
        try:
            decision = decide(context, space, self.backend, derive_seed(seed, "decide"),
                              temperature=self.temperature, max_retries=self.max_retries, meta=meta)
        except UnparseableDecision as exc:
            self._emit(type="decision", question_kind=question_kind, context=context.assembled,
                       attempts=exc.attempts, value=None, failed=True)
            raise
        self._emit(type="decision", question_kind=question_kind, context=context.assembled,
                   attempts=decision.attempts, value=decision.value, failed=False)
        return decision
