"""Two-stage third-party punishment trust game.

Stage 1: a scripted Helper keeps its whole $10; the Signaller may pay $2
to cut the Helper's winnings by $6. Stage 2: a Chooser sends part of its
endowment to the Signaller, the amount is tripled, and the Signaller
returns part of it. In the public condition the Chooser learns the
Stage-1 decision; in the private condition it does not.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

from .agent import ActionSpace, Agent, ArchitectureConfig
from .errors import BoundsViolation, CacheMiss, GabmError
from .personas import Persona, assign_personas, load_personas
from .seeding import derive_seed

CONDITIONS = ("public", "private")

PUNISH = ActionSpace.binary(
    "Punish", "Do not punish",
    yes_aliases=("punishes", "will punish", "pay to punish"),
    no_aliases=("not punish", "don't punish", "will not punish", "won't punish", "no punishment",
                "does not punish", "doesn't punish", "decline to punish"),
)


@dataclass(frozen=True)
class TppParams:
    helper_endowment_s1: int = 10
    signaller_endowment_s1: int = 10
    punish_cost: int = 2
    punish_damage: int = 6
    chooser_endowment_s2: int = 10
    multiplier: int = 3
    condition: str = "public"
    clamp: bool = True

    def __post_init__(self):
        amounts = (self.helper_endowment_s1, self.signaller_endowment_s1, self.punish_cost,
                   self.punish_damage, self.chooser_endowment_s2)
        if any(a <= 0 for a in amounts):
            raise ValueError("all TPP amounts must be positive")
        if self.multiplier != 3:
            raise ValueError("the trust game multiplier is fixed at 3")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")


@dataclass(frozen=True)
class Stage1Record:
    punished: bool
    signaller_payoff: int
    helper_payoff: int
    helper_sent: int = 0

    def __post_init__(self):
        if self.helper_sent != 0:
            raise ValueError("the Helper is scripted to give $0")


@dataclass(frozen=True)
class Stage2Record:
    sent: int
    tripled: int
    returned: int
    endowment: int
    chooser_payoff: int
    signaller_payoff: int
    sent_pct: float
    returned_pct: float

    def __post_init__(self):
        if not 0 <= self.sent <= self.endowment:
            raise BoundsViolation(f"sent {self.sent} outside [0, {self.endowment}]")
        if self.tripled != 3 * self.sent:
            raise BoundsViolation("tripled must equal 3 * sent")
        if not 0 <= self.returned <= self.tripled:
            raise BoundsViolation(f"returned {self.returned} outside [0, {self.tripled}]")


def stage1_payoffs(punished: bool, params: TppParams) -> Stage1Record:
    cost = params.punish_cost if punished else 0
    damage = params.punish_damage if punished else 0
    return Stage1Record(
        punished=punished,
        signaller_payoff=params.signaller_endowment_s1 - cost,
        helper_payoff=params.helper_endowment_s1 - damage,
    )


def stage2_payoffs(sent: int, returned: int, endowment: int) -> Stage2Record:
    tripled = 3 * sent
    return Stage2Record(
        sent=sent,
        tripled=tripled,
        returned=returned,
        endowment=endowment,
        chooser_payoff=endowment - sent + returned,
        signaller_payoff=tripled - returned,
        sent_pct=100.0 * sent / endowment,
        returned_pct=100.0 * returned / tripled if tripled else 0.0,
    )


def punishment_text(name: str, punished: bool) -> str:
    if punished:
        return f"In an earlier game, {name} watched a Helper give $0 and chose to pay $2 to punish the Helper."
    return f"In an earlier game, {name} watched a Helper give $0 and chose not to punish the Helper."


def run_stage1(signaller: Agent, params: TppParams, seed: int) -> Stage1Record:
    h = params.helper_endowment_s1
    signaller.observe(
        f"You are watching a Trust Game. The Helper received ${h} and could send any part of it to "
        f"the Recipient, with the amount sent tripled. The Helper sent $0 and kept all ${h}."
    )
    signaller.observe(
        f"You have ${params.signaller_endowment_s1}. You may pay ${params.punish_cost} to punish the "
        f"Helper, which reduces the Helper's winnings by ${params.punish_damage}."
    )
    if params.condition == "public":
        signaller.observe("Your decision would be public: the person you play with next will be told what you decided.")
    else:
        signaller.observe("Your decision would remain private: nobody you play with later will learn it.")
    decision = signaller.act(
        f"will {signaller.name} pay ${params.punish_cost} to punish the Helper for sending $0",
        PUNISH, derive_seed(seed, "stage1"), question_kind="punish",
        features={"condition": params.condition},
    )
    record = stage1_payoffs(bool(decision.value), params)
    verb = "paid $2 to punish" if record.punished else "did not punish"
    signaller.observe(f"You {verb} the Helper. Your Stage 1 payoff is ${record.signaller_payoff}.")
    return record


def run_stage2(chooser: Agent, signaller: Agent, s1: Stage1Record, params: TppParams, seed: int) -> Stage2Record:
    e = params.chooser_endowment_s2
    chooser.observe(
        f"You are the Chooser in a Trust Game with {signaller.name}. You have ${e} and may send any "
        f"whole-dollar amount to {signaller.name}. The amount sent is tripled, and {signaller.name} then "
        f"decides how much of the tripled amount to return to you."
    )
    features = {"endowment": e, "condition": params.condition}
    if params.condition == "public":
        chooser.observe(punishment_text(signaller.name, s1.punished))
        features["partner_punished"] = s1.punished
    else:
        chooser.observe(f"You have no information about what {signaller.name} did before this game.")
    sent_space = ActionSpace.amount(e, clamp=params.clamp)
    sent = chooser.act(
        f"how many dollars (0 to {e}) will {chooser.name} send to {signaller.name}",
        sent_space, derive_seed(seed, "send"), question_kind="send", features=features,
    ).value
    tripled = 3 * sent
    chooser.observe(f"You sent ${sent} to {signaller.name}; it was tripled to ${tripled}.")

    knew = "knew" if params.condition == "public" else "did not know"
    signaller.observe(
        f"Stage 2: {chooser.name} sent you ${sent} in a Trust Game; it was tripled to ${tripled}. "
        f"{chooser.name} {knew} your earlier punishment decision."
    )
    if tripled:
        signaller.observe(f"You may return any whole-dollar amount from $0 to ${tripled} to {chooser.name}.")
        returned = signaller.act(
            f"how many dollars (0 to {tripled}) will {signaller.name} return to {chooser.name}",
            ActionSpace.amount(tripled, clamp=params.clamp), derive_seed(seed, "return"),
            question_kind="return", features={"tripled": tripled, "condition": params.condition},
        ).value
    else:
        returned = 0
    record = stage2_payoffs(sent, returned, e)
    chooser.observe(f"{signaller.name} returned ${returned}. Your payoff is ${record.chooser_payoff}.")
    signaller.observe(f"You returned ${returned}. Your Stage 2 payoff is ${record.signaller_payoff}.")
    return record


@dataclass
class TppGame:
    index: int
    seed: int
    condition: str
    architecture: str
    signaller: Persona
    chooser: Persona
    stage1: Optional[Stage1Record] = None
    stage2: Optional[Stage2Record] = None
    error: Optional[str] = None
    events: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None

    def outcome(self) -> dict:
        return {
            "study": "tpp",
            "index": self.index,
            "seed": self.seed,
            "condition": self.condition,
            "architecture": self.architecture,
            "signaller": self.signaller.name,
            "signaller_tendency": self.signaller.cooperation_tendency,
            "chooser": self.chooser.name,
            "chooser_tendency": self.chooser.cooperation_tendency,
            "stage1": asdict(self.stage1) if self.stage1 else None,
            "stage2": asdict(self.stage2) if self.stage2 else None,
            "error": self.error,
        }


def play_tpp_game(index: int, arch: ArchitectureConfig, condition: str, backend, seed: int,
                  pool: Sequence[Persona], params: Optional[TppParams] = None,
                  temperature: float = 1.0) -> TppGame:
    """One full game with two fresh agents drawn from ``pool``."""
    params = params or TppParams(condition=condition)
    if params.condition != condition:
        params = TppParams(**{**asdict(params), "condition": condition})
    signaller_p, chooser_p = assign_personas(pool, 2, derive_seed(seed, "personas"))
    game = TppGame(index, seed, condition, arch.name, signaller_p, chooser_p)

    def sink(event, role):
        game.events.append(dict(event, role=role))

    signaller = Agent(signaller_p.name, signaller_p, arch, backend, temperature=temperature,
                      sink=lambda e: sink(e, "signaller"))
    chooser = Agent(chooser_p.name, chooser_p, arch, backend, temperature=temperature,
                    sink=lambda e: sink(e, "chooser"))
    try:
        game.stage1 = run_stage1(signaller, params, seed)
        game.stage2 = run_stage2(chooser, signaller, game.stage1, params, seed)
    except CacheMiss:
        raise
    except GabmError as exc:
        game.error = f"{type(exc).__name__}: {exc}"
    return game


def tpp_experiment(n: int, arch: ArchitectureConfig, condition: str, backend, seed: int,
                   pool: Optional[Sequence[Persona]] = None, params: Optional[TppParams] = None,
                   on_game: Optional[Callable[[TppGame], None]] = None) -> List[TppGame]:
    """``n`` independent games with per-game seeds ``derive_seed(seed, i)``.

    Failed games are kept (with ``error`` set) so callers can report the
    failure count; the run continues past them.
    """
    if n < 2:
        raise ValueError("a TPP experiment needs at least 2 games")
    pool = list(pool) if pool is not None else load_personas()
    games = []
    for i in range(n):
        game = play_tpp_game(i, arch, condition, backend, derive_seed(seed, i), pool, params)
        games.append(game)
        if on_game:
            on_game(game)
    return games
