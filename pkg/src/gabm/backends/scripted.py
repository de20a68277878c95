"""Deterministic persona-parameterized policy standing in for the LLM.

Decision rules (tendency = persona cooperation tendency, noise drawn
uniformly from [-noise_scale, +noise_scale]):

* punish           iff tendency + noise > 0.5
* send fraction    0.3 + 0.25 * tendency + 0.15 * partner_punished
* return fraction  0.3 + 0.3 * tendency
* contribution     round(10 * clamp(tendency + condition_bonus + noise, 0, 1))
* vote             exclude the lowest known contributor iff they gave < 3
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..errors import UnsupportedQuestionKind
from ..util import clamp, round_half_up
from .base import CompletionRequest

CONDITION_BONUS = {
    "basic": 0.0,
    "gossip": 0.15,
    "gossip_ostracism": 0.25,
    "discussion": 0.30,
}
VOTE_THRESHOLD = 3
QUESTION_KINDS = ("punish", "send", "return", "contribute", "vote", "gossip", "discuss")


@dataclass
class ScriptedPolicy:
    tendency: float
    noise_scale: float = 0.15
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")

    def noise(self) -> float:
        if self.noise_scale == 0:
            return 0.0
        return self.rng.uniform(-self.noise_scale, self.noise_scale)


def _lowest(contributions: dict):
    name = min(contributions, key=lambda n: (contributions[n], n))
    return name, contributions[name]


def scripted_decide(policy: ScriptedPolicy, question_kind: str, features: dict) -> str:
    t = policy.tendency
    if question_kind == "punish":
        return "Punish" if t + policy.noise() > 0.5 else "Do not punish"
    if question_kind == "send":
        frac = 0.3 + 0.25 * t + 0.15 * bool(features.get("partner_punished", False))
        amount = round_half_up(frac * features.get("endowment", 10))
        return f"I'll send ${amount}."
    if question_kind == "return":
        amount = round_half_up((0.3 + 0.3 * t) * features["tripled"])
        return f"I will return ${amount}."
    if question_kind == "contribute":
        bonus = CONDITION_BONUS[features.get("condition", "basic")]
        allotment = features.get("allotment", 10)
        points = round_half_up(allotment * clamp(t + bonus + policy.noise(), 0.0, 1.0))
        return f"I contribute {points} points."
    if question_kind == "vote":
        candidates = features.get("candidates")
        known = {n: c for n, c in features.get("known_contributions", {}).items()
                 if candidates is None or n in candidates}
        if known:
            name, c = _lowest(known)
            if c < VOTE_THRESHOLD:
                return f"I vote to exclude {name}."
        return "I abstain."
    if question_kind == "gossip":
        group = features.get("group_contributions", {})
        if not group:
            return "NO NOTE"
        name, c = _lowest(group)
        return f"{name}: contributed {c} of 10 points this round."
    if question_kind == "discuss":
        return f"I propose we all contribute {round_half_up(10 * t)} points."
    raise UnsupportedQuestionKind(f"scripted policy has no rule for {question_kind!r}")


def _component_text(component: str, agent: str, persona: dict, memory: list) -> str:
    t = persona.get("cooperation_tendency", 0.5)
    if component == "ObservationSummary":
        return "\n".join(memory[-3:]) if memory else "No observations yet."
    if component == "SituationAssessment":
        if not memory:
            return "first round, no history"
        return f"{agent} has made {len(memory)} observations so far. Latest: {memory[-1]}"
    if component == "Persona":
        lean = "fairness and trust" if t >= 0.5 else "maximizing my own payoff"
        return f"As {persona.get('name', agent)} (cooperation tendency {t}), I lean toward {lean}."
    if component in ("TheoryOfMind", "TheoryOfMind2"):
        if not memory:
            return "No information about the other players yet."
        return "I expect the others to keep acting in line with what I have seen of them so far."
    if component == "Strategy":
        return "Match what reliable partners do and protect my own earnings from free riders."
    if component == "Emotion":
        return "I feel calm and hopeful." if t >= 0.5 else "I feel wary of being exploited."
    return "No further thoughts."


class ScriptedBackend:
    """Offline backend; a pure function of the request (prompt, meta, seed)."""

    backend_id = "scripted"

    def __init__(self, noise_scale: float = 0.15, model_id: str = "scripted-policy-v1"):
        if noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        self.noise_scale = noise_scale
        self.model_id = model_id

    def complete(self, request: CompletionRequest) -> str:
        meta = request.meta
        persona = meta.get("persona", {})
        if meta.get("purpose") == "component":
            return _component_text(meta.get("component", ""), meta.get("agent", ""), persona,
                                   meta.get("memory", []))
        if meta.get("purpose") == "decision":
            policy = ScriptedPolicy(
                tendency=persona.get("cooperation_tendency", 0.5),
                noise_scale=self.noise_scale,
                rng=random.Random(request.seed),
            )
            return scripted_decide(policy, meta.get("question_kind", ""), meta.get("features", {}))
        raise UnsupportedQuestionKind("request carries no scripted purpose")
