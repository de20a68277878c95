"""Repeated public goods sessions with gossip, ostracism and discussion.

Phase order within a round: regroup, gossip delivery, discussion, vote,
contribute, reveal, gossip send. Agents are identified by their (unique)
names throughout.
"""

from __future__ import annotations

import random
import re
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .agent import ActionSpace, Agent, ArchitectureConfig
from .errors import BoundsViolation, CacheMiss, GabmError, UnparseableDecision
from .personas import Persona, assign_personas, load_personas
from .seeding import derive_seed

CONDITIONS = ("basic", "gossip", "gossip_ostracism", "discussion")
GOSSIP_CONDITIONS = ("gossip", "gossip_ostracism", "discussion")
VOTE_CONDITIONS = ("gossip_ostracism", "discussion")
GOSSIP_PREFIX = "anonymous gossip:"
GROUPING_RESTARTS = 64


@dataclass(frozen=True)
class PggParams:
    n_agents: int = 24
    group_size: int = 4
    rounds: int = 6
    allotment: int = 10
    multiplier_full: float = 2.0
    multiplier_ostracism: float = 1.5
    condition: str = "basic"
    ostracism_threshold: int = 2

    def __post_init__(self):
        if self.n_agents % self.group_size:
            raise ValueError("n_agents must be divisible by group_size")
        if min(self.multiplier_full, self.multiplier_ostracism, self.ostracism_threshold,
               self.allotment, self.rounds) <= 0:
            raise ValueError("multipliers, threshold, allotment and rounds must be positive")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")

    @property
    def gossip(self) -> bool:
        return self.condition in GOSSIP_CONDITIONS

    @property
    def voting(self) -> bool:
        return self.condition in VOTE_CONDITIONS

    @property
    def discussion(self) -> bool:
        return self.condition == "discussion"


@dataclass(frozen=True)
class GossipNote:
    author: str
    subject: str
    text: str
    round: int
    target_round: int

    def recipient_text(self) -> str:
        """What recipients see; the author is never named."""
        return f"{GOSSIP_PREFIX} about {self.subject}: {self.text}"


@dataclass
class RoundRecord:
    round: int
    groups: List[List[str]]
    contributions: Dict[str, int] = field(default_factory=dict)
    ostracized: List[str] = field(default_factory=list)
    votes: Dict[str, Optional[str]] = field(default_factory=dict)
    gossip_sent: List[GossipNote] = field(default_factory=list)
    discussion_log: List[Tuple[int, str, str]] = field(default_factory=list)
    earnings: Dict[str, float] = field(default_factory=dict)
    multipliers: List[float] = field(default_factory=list)
    flags: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["discussion_log"] = [list(x) for x in self.discussion_log]
        return d


# grouping ------------------------------------------------------------------

def pair_counts(history: Sequence[Sequence[Sequence[str]]]) -> Counter:
    counts: Counter = Counter()
    for partition in history:
        for group in partition:
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    counts[frozenset((a, b))] += 1
    return counts


def _greedy_partition(order: List[str], size: int, counts: Counter) -> Tuple[List[List[str]], int]:
    remaining = list(order)
    groups, cost = [], 0
    while remaining:
        group = [remaining.pop(0)]
        while len(group) < size:
            best = min(range(len(remaining)),
                       key=lambda j: sum(counts[frozenset((remaining[j], m))] for m in group))
            cost += sum(counts[frozenset((remaining[best], m))] for m in group)
            group.append(remaining.pop(best))
        groups.append(group)
    return groups, cost


def assign_groups(round_index: int, history: Sequence, seed: int, agents: Sequence[str],
                  group_size: int = 4) -> List[List[str]]:
    """Partition ``agents`` into groups, greedily avoiding repeat pairings.

    Several seeded shuffles are tried and the one with the fewest repeated
    pairs is kept (first one wins ties), so the result is deterministic.
    """
    if len(agents) % group_size:
        raise ValueError("agent count must be divisible by group size")
    counts = pair_counts(history)
    best, best_cost = None, None
    for attempt in range(GROUPING_RESTARTS):
        order = list(agents)
        random.Random(derive_seed(seed, "groups", round_index, attempt)).shuffle(order)
        groups, cost = _greedy_partition(order, group_size, counts)
        if best_cost is None or cost < best_cost:
            best, best_cost = groups, cost
        if cost == 0:
            break
    return best


# payoffs -------------------------------------------------------------------

def compute_payoffs(contributions: Mapping[str, int], multiplier: float, allotment: int = 10) -> Dict[str, float]:
    """earnings_i = (allotment - c_i) + multiplier * sum(c) / group size."""
    for name, c in contributions.items():
        if not 0 <= c <= allotment:
            raise BoundsViolation(f"contribution {c} by {name} outside [0, {allotment}]")
    if not contributions:
        return {}
    share = multiplier * sum(contributions.values()) / len(contributions)
    return {name: (allotment - c) + share for name, c in contributions.items()}


def settle_group(group: Sequence[str], contributions: Mapping[str, int], ostracized, params: PggParams):
    """Earnings for one group and the multiplier used (None when skipped)."""
    playing = {n: contributions[n] for n in group if n not in ostracized}
    excluded = len(playing) < len(group)
    if len(playing) < 2:
        return {n: 0.0 for n in group}, None
    multiplier = params.multiplier_ostracism if excluded else params.multiplier_full
    earnings = compute_payoffs(playing, multiplier, params.allotment)
    earnings.update({n: 0.0 for n in group if n in ostracized})
    return earnings, multiplier


def tally_votes(votes: Mapping[str, Optional[str]], threshold: int = 2) -> List[str]:
    counts = Counter(v for v in votes.values() if v is not None)
    return sorted(n for n, c in counts.items() if c >= threshold)


# phases --------------------------------------------------------------------

_NO_NOTE = re.compile(r"\bno\s+note\b", re.IGNORECASE)


def parse_gossip(text: str, candidates: Sequence[str]):
    """Return (subject, note), None for an explicit "no note", or raise."""
    stripped = text.strip()
    if not stripped or _NO_NOTE.search(stripped):
        return None
    names = sorted(candidates, key=len, reverse=True)
    alt = "|".join(re.escape(n) for n in names)
    labelled = list(re.finditer(rf"(?<!\w)({alt})\s*:\s*(.+)", stripped, re.IGNORECASE | re.DOTALL))
    if labelled:
        m = labelled[-1]
        subject = next(n for n in names if n.lower() == m.group(1).lower())
        return subject, m.group(2).strip()
    mentioned = list(re.finditer(rf"(?<!\w)({alt})(?!\w)", stripped, re.IGNORECASE))
    if mentioned:
        subject = next(n for n in names if n.lower() == mentioned[-1].group(1).lower())
        return subject, stripped
    raise UnparseableDecision([text], "gossip")


def _redact(text: str, author: str) -> str:
    return re.sub(re.escape(author), "someone", text, flags=re.IGNORECASE)


def gossip_phase(record: RoundRecord, agents: Mapping[str, Agent], seed: int,
                 params: PggParams) -> List[GossipNote]:
    """Each agent may write one anonymous note about a current groupmate."""
    if not params.gossip:
        return []
    notes = []
    for group in record.groups:
        for name in group:
            mates = [m for m in group if m != name]
            features = {
                "group_contributions": {m: record.contributions[m] for m in mates if m in record.contributions},
                "condition": params.condition,
            }
            question = (f"will {name} send an anonymous gossip note about one of {', '.join(mates)} "
                        f"to that person's next group, and what will it say")
            space = ActionSpace.text(f"<name>: <note> about one of {', '.join(mates)}, or NO NOTE")
            try:
                raw = agents[name].act(question, space, derive_seed(seed, "gossip", name),
                                       question_kind="gossip", features=features).value
                parsed = parse_gossip(raw, mates)
            except UnparseableDecision as exc:
                record.flags.append({"agent": name, "phase": "gossip", "reason": str(exc)})
                continue
            if parsed is None:
                continue
            subject, text = parsed
            if name in record.ostracized or subject in record.ostracized:
                record.flags.append({"agent": name, "phase": "gossip",
                                     "reason": "note involves an ostracized player"})
            notes.append(GossipNote(name, subject, _redact(text, name), record.round, record.round + 1))
    return notes


def deliver_gossip(notes: Sequence[GossipNote], groups: Sequence[Sequence[str]], agents: Mapping[str, Agent],
                   round_index: int, params: PggParams, known: Dict[str, Dict[str, int]],
                   last_contribution: Mapping[str, Optional[int]]) -> Dict[str, List[str]]:
    """Route notes for ``round_index`` to each subject's current groupmates.

    Notes aimed past the final round are discarded. Returns recipient ->
    delivered texts.
    """
    where = {n: g for g in groups for n in g}
    delivered = defaultdict(list)
    for note in notes:
        if note.target_round != round_index or note.target_round >= params.rounds:
            continue
        for recipient in where.get(note.subject, ()):
            if recipient == note.subject:
                continue
            text = note.recipient_text()
            agents[recipient].observe(text, phase="gossip", subject=note.subject)
            delivered[recipient].append(text)
            c = last_contribution.get(note.subject)
            if c is not None:
                known.setdefault(recipient, {})[note.subject] = c
    return dict(delivered)


def discussion_phase(group: Sequence[str], agents: Mapping[str, Agent], seed: int,
                     round_index: int) -> List[Tuple[str, str]]:
    """One round-robin pass in seat order; every message reaches the whole group."""
    messages = []
    for name in group:
        question = f"what will {name} say to the group before this round's decisions"
        msg = agents[name].act(question, ActionSpace.text("your message to the group"),
                               derive_seed(seed, "discuss", name), question_kind="discuss",
                               features={"round": round_index}).value
        messages.append((name, msg))
        for member in group:
            agents[member].observe(f"Discussion: {name} said: {msg}", phase="discussion")
    return messages


def ostracism_vote(group: Sequence[str], agents: Mapping[str, Agent], seed: int, params: PggParams,
                   known: Mapping[str, Mapping[str, int]], record: RoundRecord) -> List[str]:
    votes = {}
    for name in group:
        mates = [m for m in group if m != name]
        features = {"known_contributions": dict(known.get(name, {})), "candidates": mates}
        question = (f"will {name} vote to exclude one of {', '.join(mates)} from this round, "
                    f"or abstain")
        try:
            votes[name] = agents[name].act(question, ActionSpace.vote(mates),
                                           derive_seed(seed, "vote", name), question_kind="vote",
                                           features=features).value
        except UnparseableDecision as exc:
            votes[name] = None
            record.flags.append({"agent": name, "phase": "vote", "reason": str(exc)})
    record.votes.update(votes)
    return tally_votes(votes, params.ostracism_threshold)


# session -------------------------------------------------------------------

@dataclass
class PggSession:
    index: int
    seed: int
    condition: str
    architecture: str
    personas: List[Persona]
    rounds: List[RoundRecord] = field(default_factory=list)
    error: Optional[str] = None
    events: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None

    def sums(self) -> Dict[str, int]:
        totals = {p.name: 0 for p in self.personas}
        for r in self.rounds:
            for name, c in r.contributions.items():
                totals[name] += c
        return totals

    def round_means(self) -> List[float]:
        """Mean contribution per round over all agents (ostracized count as 0)."""
        n = len(self.personas)
        return [sum(r.contributions.values()) / n for r in self.rounds]

    def outcome(self) -> dict:
        return {
            "study": "pgg",
            "index": self.index,
            "seed": self.seed,
            "condition": self.condition,
            "architecture": self.architecture,
            "agents": [{"name": p.name, "tendency": p.cooperation_tendency} for p in self.personas],
            "rounds": [r.to_dict() for r in self.rounds],
            "sums": self.sums(),
            "error": self.error,
        }


def pgg_session(params: PggParams, agents: Sequence[Agent], seed: int, session: PggSession) -> PggSession:
    """Play all rounds; contribution failures abort with a partial record."""
    if len(agents) != params.n_agents:
        raise ValueError(f"expected {params.n_agents} agents, got {len(agents)}")
    by_name = {a.name: a for a in agents}
    names = [a.name for a in agents]
    history: List[List[List[str]]] = []
    pending: List[GossipNote] = []
    known: Dict[str, Dict[str, int]] = defaultdict(dict)
    last_contribution: Dict[str, Optional[int]] = {}
    try:
        for r in range(params.rounds):
            rseed = derive_seed(seed, "round", r)
            groups = assign_groups(r, history, seed, names, params.group_size)
            history.append(groups)
            record = RoundRecord(round=r, groups=groups)
            session.rounds.append(record)
            for group in groups:
                for name in group:
                    mates = ", ".join(m for m in group if m != name)
                    by_name[name].observe(f"Round {r + 1} of {params.rounds} begins. Your group: {mates}.")

            deliver_gossip(pending, groups, by_name, r, params, known, last_contribution)
            pending = []

            ostracized: List[str] = []
            for gi, group in enumerate(groups):
                if params.discussion:
                    for speaker, msg in discussion_phase(group, by_name, rseed, r):
                        record.discussion_log.append((gi, speaker, msg))
                if params.voting:
                    out = ostracism_vote(group, by_name, rseed, params, known, record)
                    for name in group:
                        if name in out:
                            by_name[name].observe("You were voted out and are excluded from this round; you earn nothing.")
                        elif out:
                            by_name[name].observe(f"The vote excluded {', '.join(out)} from this round.")
                        else:
                            by_name[name].observe("Nobody was excluded from this round.")
                    ostracized.extend(out)
            record.ostracized = sorted(ostracized)

            for group in groups:
                for name in group:
                    if name in ostracized:
                        continue
                    c = by_name[name].act(
                        f"how many of {name}'s {params.allotment} points will {name} contribute to the group fund",
                        ActionSpace.amount(params.allotment), derive_seed(rseed, "contribute", name),
                        question_kind="contribute",
                        features={"condition": params.condition, "allotment": params.allotment, "round": r},
                    ).value
                    record.contributions[name] = c

            for group in groups:
                earnings, multiplier = settle_group(group, record.contributions, ostracized, params)
                record.earnings.update(earnings)
                record.multipliers.append(multiplier)
                summary = "; ".join(
                    f"{n} contributed {record.contributions[n]} and earned {earnings[n]:g}"
                    if n in record.contributions else f"{n} was excluded and earned 0"
                    for n in group
                )
                for name in group:
                    by_name[name].observe(f"Round {r + 1} results for your group: {summary}.")
            for name in names:
                last_contribution[name] = record.contributions.get(name)

            if params.gossip and r + 1 < params.rounds:
                record.gossip_sent = gossip_phase(record, by_name, rseed, params)
                pending = record.gossip_sent
    except CacheMiss:
        raise
    except GabmError as exc:
        session.error = f"round {len(session.rounds) - 1}: {type(exc).__name__}: {exc}"
    return session


def play_pgg_session(index: int, arch: ArchitectureConfig, condition: str, backend, seed: int,
                     pool: Sequence[Persona], params: Optional[PggParams] = None,
                     temperature: float = 1.0) -> PggSession:
    params = params or PggParams(condition=condition)
    if params.condition != condition:
        params = PggParams(**{**asdict(params), "condition": condition})
    personas = assign_personas(pool, params.n_agents, derive_seed(seed, "personas"))
    session = PggSession(index, seed, condition, arch.name, personas)
    sink = session.events.append
    agents = [Agent(p.name, p, arch, backend, temperature=temperature, sink=sink) for p in personas]
    return pgg_session(params, agents, seed, session)


def pgg_experiment(n_sessions: int, arch: ArchitectureConfig, condition: str, backend, seed: int,
                   pool: Optional[Sequence[Persona]] = None,
                   params: Optional[PggParams] = None) -> List[PggSession]:
    pool = list(pool) if pool is not None else load_personas()
    return [play_pgg_session(i, arch, condition, backend, derive_seed(seed, i), pool, params)
            for i in range(n_sessions)]
