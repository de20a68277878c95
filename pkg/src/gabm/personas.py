"""Persona pool: loading, validation, sampling and prompt rendering."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Sequence

from .errors import ValidationError

TEXT_FIELDS = ("name", "gender", "occupation", "background", "traits")


@dataclass(frozen=True)
class Persona:
    name: str
    age: int
    gender: str
    occupation: str
    background: str
    traits: str
    cooperation_tendency: float

    def __post_init__(self):
        for f in TEXT_FIELDS:
            value = getattr(self, f)
            if not isinstance(value, str) or not value.strip():
                raise ValidationError(f, getattr(self, "name", None))
        if isinstance(self.age, bool) or not isinstance(self.age, int) or self.age <= 0:
            raise ValidationError("age", self.name)
        t = self.cooperation_tendency
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0:
            raise ValidationError(
                "cooperation_tendency", self.name,
                f"cooperation_tendency must lie in [0, 1] for {self.name!r}, got {t!r}",
            )

    @classmethod
    def from_dict(cls, record: dict) -> "Persona":
        names = {f.name for f in fields(cls)}
        who = record.get("name")
        for key in record:
            if key not in names:
                raise ValidationError(key, who, f"unexpected field {key!r} for persona {who!r}")
        for key in names:
            if key not in record:
                raise ValidationError(key, who, f"missing field {key!r} for persona {who!r}")
        return cls(**record)

    def to_dict(self) -> dict:
        return asdict(self)

    def describe(self) -> str:
        return (
            f"{self.name}, a {self.age}-year-old {self.gender} working as a "
            f"{self.occupation}. {self.background}. Traits: {self.traits}."
        )


def default_persona_path() -> Path:
    return Path(str(resources.files("gabm") / "data" / "personas.jsonl"))


def load_personas(source=None) -> List[Persona]:
    """Read a persona file (one JSON object per line), preserving order."""
    path = Path(source) if source is not None else default_persona_path()
    personas = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError("record", None, f"{path}:{lineno}: {exc}") from exc
            personas.append(Persona.from_dict(record))
    names = [p.name for p in personas]
    dupes = [n for n, c in Counter(names).items() if c > 1]
    if dupes:
        raise ValidationError("name", dupes[0], f"duplicate persona name {dupes[0]!r}")
    return personas


def dump_personas(personas: Iterable[Persona], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in personas:
            fh.write(json.dumps(p.to_dict(), ensure_ascii=False) + "\n")


def assign_personas(pool: Sequence[Persona], n_agents: int, seed: int) -> List[Persona]:
    """Draw ``n_agents`` personas from ``pool``.

    Without replacement when the pool is large enough, otherwise with
    replacement; repeated names get a ``#k`` suffix so every agent name is
    unique.
    """
    if not pool:
        raise ValueError("persona pool is empty")
    rng = random.Random(seed)
    if n_agents <= len(pool):
        drawn = rng.sample(list(pool), n_agents)
    else:
        drawn = rng.choices(list(pool), k=n_agents)
    seen: Counter = Counter()
    out = []
    for p in drawn:
        seen[p.name] += 1
        if seen[p.name] > 1:
            p = replace(p, name=f"{p.name} #{seen[p.name]}")
        out.append(p)
    return out


# Pool generator: the shipped file holds the appendix personas followed by
# generate_personas(20).

_FIRST = [
    "Amara", "Bruno", "Chiara", "Dmitri", "Esi", "Farid", "Hana", "Ivan", "Jasmine", "Kwame",
    "Lucia", "Mateo", "Nadia", "Omar", "Priya", "Rafael", "Sofia", "Tomasz", "Uma", "Viktor",
]
_LAST = [
    "Adeyemi", "Costa", "Ferraro", "Volkov", "Mensah", "Haddad", "Sato", "Petrov", "Reyes", "Boateng",
    "Moreno", "Silva", "Karimi", "Nasser", "Raman", "Duarte", "Lindqvist", "Nowak", "Iyer", "Horvath",
]
_OCCUPATIONS = [
    ("Hedge Fund Trader", "Built a career on exploiting small market inefficiencies"),
    ("Used Car Dealer", "Negotiates hard on every deal and rarely leaves money on the table"),
    ("Startup Founder", "Has bootstrapped two companies and guards resources closely"),
    ("Tax Attorney", "Advises clients on keeping as much of their income as possible"),
    ("Sales Manager", "Runs a commission-driven team and rewards top performers"),
    ("Accountant", "Keeps careful books and dislikes waste"),
    ("Software Engineer", "Works on distributed systems and values efficient solutions"),
    ("Restaurant Owner", "Runs a small family business on thin margins"),
    ("Civil Engineer", "Designs public infrastructure under tight budgets"),
    ("Journalist", "Covers local politics and is wary of hidden agendas"),
    ("High School Teacher", "Teaches civics and coaches the debate team"),
    ("Pharmacist", "Serves a neighborhood pharmacy and knows most customers by name"),
    ("Librarian", "Runs community reading programs"),
    ("Union Organizer", "Has spent years negotiating fair contracts for workers"),
    ("Family Doctor", "Cares for patients in a rural clinic"),
    ("Social Worker", "Supports families through difficult transitions"),
    ("Nurse", "Works night shifts in an emergency department"),
    ("Community Organizer", "Coordinates volunteers for neighborhood projects"),
    ("Humanitarian Aid Worker", "Has delivered relief in several crisis zones"),
    ("Volunteer Firefighter", "Serves the local fire brigade without pay"),
]
_TRAITS = [
    (0.2, ["Competitive", "opportunistic", "skeptical of others' motives"]),
    (0.4, ["Pragmatic", "cautious", "focused on a fair return for effort"]),
    (0.6, ["Fair-minded", "reciprocal", "values rules being followed"]),
    (0.8, ["Cooperative", "trusting", "cares about group outcomes"]),
    (1.01, ["Generous", "empathetic", "committed to helping others even at a cost"]),
]
_GENDERS = ["Female", "Male"]


def _traits_for(tendency: float) -> str:
    for upper, words in _TRAITS:
        if tendency < upper:
            return ", ".join(words)
    raise AssertionError("unreachable")


def generate_personas(n: int = 20) -> List[Persona]:
    """Deterministic persona recipe: name x occupation x tendency grid.

    Tendencies are evenly spaced on [0.05, 0.95]; occupations are ordered
    from self-interested to prosocial so that backgrounds agree with the
    tendency, and traits come from the lexicon band of the tendency.
    """
    if not 1 <= n <= len(_FIRST):
        raise ValueError(f"can generate between 1 and {len(_FIRST)} personas")
    out = []
    for i in range(n):
        tendency = round(0.05 + 0.9 * i / (n - 1), 2) if n > 1 else 0.5
        occ_idx = round(i * (len(_OCCUPATIONS) - 1) / max(n - 1, 1))
        occupation, background = _OCCUPATIONS[occ_idx]
        out.append(
            Persona(
                name=f"{_FIRST[i]} {_LAST[i]}",
                age=24 + (i * 7) % 41,
                gender=_GENDERS[i % 2],
                occupation=occupation,
                background=background,
                traits=_traits_for(tendency),
                cooperation_tendency=tendency,
            )
        )
    return out


APPENDIX_PERSONAS = [
    Persona(
        name="Grace Okonjo", age=36, gender="Female", occupation="Non-profit Director",
        background="Dedicated life to charitable causes and helping others",
        traits="Altruistic, optimistic about human nature, believes in karma",
        cooperation_tendency=0.9,
    ),
    Persona(
        name="James Miller", age=52, gender="Male", occupation="Corporate Executive",
        background="Ruthless businessman who believes in survival of the fittest",
        traits="Calculating, manipulative, and focused solely on personal gain",
        cooperation_tendency=0.1,
    ),
    Persona(
        name="Mei Lin", age=36, gender="Female", occupation="Game Theory Researcher",
        background="Studies strategic decision-making and cooperation",
        traits="Analytical, experimental, fascinated by human choices",
        cooperation_tendency=0.5,
    ),
    Persona(
        name="Leo Virtanen", age=52, gender="Male", occupation="Professional Mediator",
        background="Specializes in resolving complex disputes",
        traits="Balanced, insightful, seeks win-win solutions",
        cooperation_tendency=0.7,
    ),
]


def build_default_pool() -> List[Persona]:
    return APPENDIX_PERSONAS + generate_personas(20)
