from __future__ import annotations

import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabm.agent import (
    ActionContext,
    ActionSpace,
    Agent,
    ComponentSpec,
    ComponentState,
    Memory,
    assemble_action_context,
    decide,
    load_architecture,
    load_architectures,
    parse_decision,
    render_template,
    topo_order,
    update_component,
)
from gabm.backends import ScriptedBackend
from gabm.backends.base import CompletionRequest
from gabm.errors import (
    BoundsViolation,
    ConfigError,
    CycleDetected,
    MissingState,
    TemplateError,
    UnknownDependency,
    UnparseableDecision,
)
from gabm.personas import APPENDIX_PERSONAS

GOLDEN = Path(__file__).parent / "golden"
GRACE = APPENDIX_PERSONAS[0]


class Canned:
    """Backend returning queued replies and recording prompts."""

    backend_id = "canned"
    model_id = "canned"

    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, request: CompletionRequest) -> str:
        self.prompts.append(request.prompt)
        return self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]


def _states(config, texts=None):
    texts = texts or {}
    return {cid: ComponentState(cid, texts.get(cid, f"output of {cid}"), 1) for cid in config.component_ids}


# topo_order -------------------------------------------------------------------

def test_base_order():
    assert topo_order(load_architecture("Base", "tpp")) == ["ObservationSummary", "SituationAssessment"]


@pytest.mark.parametrize("study", ["tpp", "pgg"])
def test_social_order_summary_first_then_declaration(study):
    cfg = load_architecture("Social", study)
    order = topo_order(cfg)
    assert order[0] == "ObservationSummary"
    assert order[1:] == [c for c in cfg.component_ids if c != "ObservationSummary"]


def test_tie_break_is_declaration_order():
    specs = [ComponentSpec("C", "c", ("A",)), ComponentSpec("B", "b"), ComponentSpec("A", "a")]
    assert topo_order(specs) == ["B", "A", "C"]


def test_two_cycle_reported():
    specs = [ComponentSpec("A", "a", ("B",)), ComponentSpec("B", "b", ("A",))]
    with pytest.raises(CycleDetected) as exc:
        topo_order(specs)
    assert set(exc.value.cycle) == {"A", "B"}


def test_unknown_dependency_named():
    with pytest.raises(UnknownDependency) as exc:
        topo_order([ComponentSpec("A", "a", ("Ghost",))])
    assert exc.value.missing == "Ghost"


def _reachable(n, edges, a, b):
    seen, todo = set(), [a]
    while todo:
        x = todo.pop()
        for (u, v) in edges:
            if u == x and v not in seen:
                seen.add(v)
                todo.append(v)
    return b in seen


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))))
def test_topo_succeeds_iff_acyclic(graph):
    n, edges = graph
    # edge (u, v): v depends on u
    specs = [ComponentSpec(f"n{i}", "t", tuple(f"n{u}" for (u, v) in sorted(edges) if v == i)) for i in range(n)]
    cyclic = any(_reachable(n, edges, i, i) for i in range(n))
    if cyclic:
        with pytest.raises(CycleDetected) as exc:
            topo_order(specs)
        cyc = [int(c[1:]) for c in exc.value.cycle]
        for x, y in zip(cyc, cyc[1:] + cyc[:1]):
            assert (y, x) in edges  # x depends on y
    else:
        order = topo_order(specs)
        pos = {c: i for i, c in enumerate(order)}
        assert sorted(order) == sorted(s.id for s in specs)
        for (u, v) in edges:
            assert pos[f"n{u}"] < pos[f"n{v}"]


# configs ----------------------------------------------------------------------

@pytest.mark.parametrize("study", ["tpp", "pgg"])
def test_all_architectures_load(study):
    configs = load_architectures(study)
    assert set(configs) == {"Base", "Social", "SocialStrategic", "SocialEmotion", "PersonaOnly", "NoToMNoPersona"}
    for cfg in configs.values():
        assert "ObservationSummary" in cfg.component_ids
        assert set(cfg.action_deps) <= set(cfg.component_ids)


def test_base_must_be_minimal():
    from gabm.agent import ArchitectureConfig

    cfg = ArchitectureConfig("Base", (ComponentSpec("ObservationSummary", "x"), ComponentSpec("SituationAssessment", "y"),
                                      ComponentSpec("Persona", "z")), ("ObservationSummary",))
    with pytest.raises(ConfigError):
        cfg.validate()


def test_second_theory_of_mind_only_in_pgg():
    assert "TheoryOfMind2" in load_architecture("Social", "pgg").component_ids
    assert "TheoryOfMind2" not in load_architecture("Social", "tpp").component_ids


# templates and components -----------------------------------------------------

def test_unknown_placeholder():
    with pytest.raises(TemplateError) as exc:
        render_template("hello {foo}", "X", agent_name="A")
    assert exc.value.placeholder == "foo"


def test_situation_assessment_canned_when_memory_empty():
    cfg = load_architecture("Base", "tpp")
    text = update_component(cfg.component("SituationAssessment"), {"ObservationSummary": "nothing"},
                            Memory(), ScriptedBackend(), 1, agent_name="Grace Okonjo", persona=GRACE)
    assert text == "first round, no history"


def test_persona_prompt_renders_appendix_fields():
    cfg = load_architecture("Social", "tpp")
    backend = Canned("ok")
    update_component(cfg.component("Persona"), {"ObservationSummary": "s"}, Memory(), backend, 1,
                     agent_name=GRACE.name, persona=GRACE)
    assert "36-year-old Female working as a Non-profit Director" in backend.prompts[0]


def test_component_prompt_layout():
    spec = ComponentSpec("X", "Think, {agent_name}.", ("A", "B"))
    mem = Memory()
    mem.add("saw something")
    backend = Canned("fine")
    update_component(spec, {"B": "bee", "A": "ay"}, mem, backend, 3, agent_name="Mo")
    assert backend.prompts[0] == "Observations so far:\n[0] saw something\n\n### A\nay\n\n### B\nbee\n\nThink, Mo."


def test_update_requires_exact_deps():
    spec = ComponentSpec("X", "t", ("A",))
    with pytest.raises(MissingState):
        update_component(spec, {}, Memory(), Canned("x"), 1, agent_name="a")
    with pytest.raises(ValueError):
        update_component(spec, {"A": "1", "B": "2"}, Memory(), Canned("x"), 1, agent_name="a")


def test_backend_error_carries_component():
    from gabm.errors import Transport

    class Failing:
        backend_id = model_id = "f"

        def complete(self, request):
            raise Transport("down")

    with pytest.raises(Transport) as exc:
        update_component(ComponentSpec("Strategy", "t"), {}, Memory(), Failing(), 1, agent_name="a")
    assert exc.value.component == "Strategy"


def test_memory_is_append_only():
    mem = Memory()
    mem.add("a", 5)
    mem.add("b")
    assert [t for t, _ in mem] == [5, 6]
    with pytest.raises(ValueError):
        mem.add("c", 1)


# assembly ---------------------------------------------------------------------

def test_base_assembly_order():
    cfg = load_architecture("Base", "tpp")
    ctx = assemble_action_context(cfg, _states(cfg), "punish or not", agent_name="Grace Okonjo", persona=GRACE)
    a = ctx.assembled
    assert a.index("### ObservationSummary") < a.index("### SituationAssessment") < a.index("punish or not")
    assert "think step by step about what" in a


def test_missing_theory_of_mind_state():
    cfg = load_architecture("Social", "tpp")
    states = _states(cfg)
    del states["TheoryOfMind"]
    with pytest.raises(MissingState) as exc:
        assemble_action_context(cfg, states, "q", agent_name="a", persona=GRACE)
    assert exc.value.component == "TheoryOfMind"


def _golden_context() -> ActionContext:
    cfg = load_architecture("Social", "tpp")
    return assemble_action_context(cfg, _states(cfg), "will Grace Okonjo punish the Helper",
                                   agent_name="Grace Okonjo", persona=GRACE)


def test_golden_assembled_text():
    assert _golden_context().assembled == (GOLDEN / "assembled_social_tpp.txt").read_text(encoding="utf-8")


def test_assembly_contains_each_block_once_in_order():
    cfg = load_architecture("SocialEmotion", "pgg")
    states = _states(cfg, {c: f"<<{c}>>" for c in cfg.component_ids})
    ctx = assemble_action_context(cfg, states, "q", agent_name="a", persona=GRACE)
    positions = [ctx.assembled.index(f"### {c}\n") for c in cfg.action_deps]
    assert positions == sorted(positions)
    for c in cfg.action_deps:
        assert ctx.assembled.count(f"<<{c}>>") == 1


@pytest.mark.parametrize("study", ["tpp", "pgg"])
def test_persona_only_never_contains_theory_of_mind(study):
    cfg = load_architecture("PersonaOnly", study)
    texts = {cid: f"TOM-SECRET {cid}" if cid.startswith("TheoryOfMind") else f"out {cid}" for cid in cfg.component_ids}
    states = _states(cfg, texts)
    states["TheoryOfMind"] = ComponentState("TheoryOfMind", "TOM-SECRET stray", 1)
    ctx = assemble_action_context(cfg, states, "q", agent_name="a", persona=GRACE)
    assert "TOM-SECRET" not in ctx.assembled
    assert "### TheoryOfMind" not in ctx.assembled


# decisions --------------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("I'll send $7", 7),
    ("Maybe 3, no, 4.", 4),
    ("send 12", 10),
    ("4.5 dollars", 5),
    ("1,000", 10),
])
def test_amount_parsing(text, expected):
    assert parse_decision(text, ActionSpace.amount(10)) == expected


def test_amount_out_of_bounds_without_clamp():
    with pytest.raises(BoundsViolation):
        parse_decision("12", ActionSpace.amount(10, clamp=False))


def test_binary_parsing_last_keyword_wins():
    from gabm.tpp import PUNISH

    assert parse_decision("I considered not punishing but in the end: Punish", PUNISH) is True
    assert parse_decision("Punish? No. Do not punish", PUNISH) is False


def test_vote_parsing():
    space = ActionSpace.vote(["Ann", "Bo"])
    assert parse_decision("I vote to exclude bo", space) == "Bo"
    assert parse_decision("I abstain", space) is None


def test_decide_grounds_scripted_punish():
    from gabm.tpp import PUNISH

    cfg = load_architecture("Base", "tpp")
    ctx = assemble_action_context(cfg, _states(cfg), "punish or not", agent_name=GRACE.name, persona=GRACE)
    d = decide(ctx, PUNISH, ScriptedBackend(noise_scale=0), 1,
               meta={"question_kind": "punish", "persona": GRACE.to_dict(), "features": {}})
    assert d.value is True
    assert d.raw == "Punish"


def test_decide_retries_then_succeeds():
    backend = Canned("maybe", "hmm", "Punish")
    from gabm.tpp import PUNISH

    d = decide(ActionContext("a", "q", "ctx"), PUNISH, backend, 1)
    assert d.value is True
    assert d.attempts == ["maybe", "hmm", "Punish"]
    assert "could not be read" in backend.prompts[1]
    assert backend.prompts[0].endswith("Answer with exactly: Punish or Do not punish")


def test_decide_gives_up_after_retries():
    from gabm.tpp import PUNISH

    backend = Canned("maybe")
    with pytest.raises(UnparseableDecision) as exc:
        decide(ActionContext("a", "q", "ctx"), PUNISH, backend, 1)
    assert exc.value.attempts == ["maybe"] * 3


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40), st.integers(0, 30))
def test_parse_soundness(text, hi):
    space = ActionSpace.amount(hi)
    try:
        value = parse_decision(text, space)
    except Exception as exc:  # unparseable is fine; out-of-space values are not
        assert type(exc).__name__ == "_NoParse"
        return
    assert space.contains(value)


def test_agent_refresh_and_act_emit_events():
    events = []
    cfg = load_architecture("Social", "tpp")
    agent = Agent(GRACE.name, GRACE, cfg, ScriptedBackend(noise_scale=0), sink=events.append)
    agent.observe("A Helper gave $0.")
    from gabm.tpp import PUNISH

    d = agent.act("punish?", PUNISH, 5, question_kind="punish")
    assert d.value is True
    kinds = [e["type"] for e in events]
    assert kinds[0] == "observation" and kinds[-1] == "decision"
    assert [e["component"] for e in events if e["type"] == "component"] == topo_order(cfg)
    assert all(s.step == 1 for s in agent.states.values())


def test_assembly_is_deterministic():
    assert _golden_context() == _golden_context()


def test_binary_space_members():
    space = ActionSpace.binary("Yes", "No")
    assert space.contains(True) and not space.contains(1)
    assert list(itertools.chain(space.options))[0] == ("Yes", True)
