from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabm.errors import ValidationError
from gabm.personas import (
    APPENDIX_PERSONAS,
    Persona,
    assign_personas,
    build_default_pool,
    dump_personas,
    load_personas,
)

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def pool():
    return load_personas()


def test_shipped_pool_contains_grace(pool):
    grace = next(p for p in pool if p.name == "Grace Okonjo")
    assert (grace.age, grace.occupation) == (36, "Non-profit Director")
    assert "Altruistic, optimistic about human nature" in grace.traits


def test_shipped_pool_contains_james(pool):
    james = next(p for p in pool if p.name == "James Miller")
    assert (james.age, james.occupation) == (52, "Corporate Executive")
    assert "Calculating, manipulative" in james.traits


def test_appendix_tendencies(pool):
    by_name = {p.name: p.cooperation_tendency for p in pool}
    assert [by_name[n] for n in ("Grace Okonjo", "Leo Virtanen", "Mei Lin", "James Miller")] == [0.9, 0.7, 0.5, 0.1]


def test_shipped_file_matches_recipe(pool):
    assert pool == build_default_pool()
    assert len(pool) == 24


def test_tendency_out_of_range():
    record = APPENDIX_PERSONAS[0].to_dict() | {"cooperation_tendency": 1.3}
    with pytest.raises(ValidationError) as exc:
        Persona.from_dict(record)
    assert exc.value.field == "cooperation_tendency"


@pytest.mark.parametrize("field,value", [("name", ""), ("traits", "  "), ("age", 0)])
def test_invalid_fields_are_named(field, value):
    with pytest.raises(ValidationError) as exc:
        Persona.from_dict(APPENDIX_PERSONAS[1].to_dict() | {field: value})
    assert exc.value.field == field


def test_file_errors_name_the_persona(tmp_path):
    bad = APPENDIX_PERSONAS[2].to_dict() | {"cooperation_tendency": -0.2}
    path = tmp_path / "p.jsonl"
    path.write_text(json.dumps(bad) + "\n")
    with pytest.raises(ValidationError) as exc:
        load_personas(path)
    assert exc.value.persona == "Mei Lin"


def test_round_trip(tmp_path, pool):
    path = tmp_path / "out.jsonl"
    dump_personas(pool, path)
    assert load_personas(path) == pool


def test_pool_of_four_n_four_is_permutation():
    for seed in range(20):
        drawn = assign_personas(APPENDIX_PERSONAS, 4, seed)
        assert sorted(p.name for p in drawn) == sorted(p.name for p in APPENDIX_PERSONAS)


def test_pool_of_four_n_24_seed_7_golden():
    drawn = assign_personas(APPENDIX_PERSONAS, 24, 7)
    assert [p.name for p in drawn] == json.loads((GOLDEN / "assign_pool4_n24_seed7.json").read_text())
    assert len({p.name for p in drawn}) == 24


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32))
def test_assignment_deterministic_and_unique(n, seed):
    a = assign_personas(APPENDIX_PERSONAS, n, seed)
    assert a == assign_personas(APPENDIX_PERSONAS, n, seed)
    assert len({p.name for p in a}) == n


def test_describe_mentions_fields():
    text = APPENDIX_PERSONAS[3].describe()
    assert "52-year-old Male working as a Professional Mediator" in text
