import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tm_strategies import chronology_walks, random_chronology
from tmkit.corpus import load_fixture
from tmkit.events import (
    EventError,
    carve_event,
    check_chronology,
    chronology_order,
    describe_events,
)
from tmkit.model import Branch, Chronology, EventElement


@pytest.fixture(scope="module")
def ordering():
    return load_fixture("ordering").model


def test_carve_event_moves_anchor_last(ordering):
    anchor = EventElement.stage("OrderingSystem.receive")
    ev = carve_event(ordering, "X", [anchor, EventElement.flow("Ordering")], anchor, "label")
    assert ev.anchor == anchor and ev.elements[0] == EventElement.flow("Ordering")


def test_carve_event_rejects_foreign_elements(ordering):
    anchor = EventElement.flow("Nope")
    with pytest.raises(EventError, match="E_EVENT_SUBSET"):
        carve_event(ordering, "X", [anchor], anchor)


def test_carve_event_requires_anchor_among_elements(ordering):
    with pytest.raises(EventError):
        carve_event(ordering, "X", [EventElement.flow("Ordering")], EventElement.trigger("invoice"))
    with pytest.raises(EventError):
        carve_event(ordering, "X", [], EventElement.trigger("invoice"))


@pytest.mark.parametrize("seq, ok", [
    (["E1", "E2", "E4", "E5", "E6", "E7", "E8", "E9"], True),
    (["E1", "E2", "E3"], True),
    (["E1", "E2", "E4", "E5", "E6", "E7", "E8", "E10", "E11"], True),
    (["E1", "E4"], False),
    (["E1", "E2", "E3", "E4"], False),
    ([], True),
])
def test_corpus_chronology(ordering, seq, ok):
    assert bool(check_chronology(seq, ordering.chronology)) is ok


def test_violation_names_the_pair(ordering):
    result = check_chronology(["E1", "E4"], ordering.chronology)
    assert result.pair == ("E1", "E4")
    assert str(result).startswith("violation at E1 -> E4")


def test_exclusive_alternatives():
    chron = Chronology((("B", "C"),), (Branch("A", ("B", "C")),))
    result = check_chronology(["A", "B", "C"], chron)
    assert not result and result.pair == ("B", "C")


def test_unknown_event_raises(ordering):
    with pytest.raises(EventError):
        check_chronology(["E1", "E99"], ordering.chronology)


def test_corpus_chronology_is_acyclic():
    for name in ("ordering", "dhl_package", "sun_warmth"):
        chron = load_fixture(name).model.chronology
        order = chronology_order(chron)
        pos = {e: i for i, e in enumerate(order)}
        for a in chron.event_ids():
            assert all(pos[a] < pos[b] for b in chron.successors(a))


def test_describe_events_lists_anchor(ordering):
    text = describe_events(ordering)
    assert "E1: An order is received." in text
    assert "    anchor OrderingSystem.receive" in text


def all_sequences(ids, max_len):
    for n in range(1, max_len + 1):
        yield from itertools.permutations(ids, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_complete_check_accepts_exactly_the_walks(n, seed):
    ids = [f"E{i}" for i in range(n)]
    chron = random_chronology(random.Random(seed), ids)
    if not chron.event_ids():
        return
    walks = chronology_walks(chron)
    nodes = list(chron.event_ids())
    for seq in all_sequences(nodes, len(nodes)):
        assert bool(check_chronology(seq, chron, complete=True)) == (seq in walks), seq


def test_walk_oracle_on_twelve_event_dags():
    rng = random.Random(7)
    for _ in range(40):
        ids = [f"E{i}" for i in range(12)]
        chron = random_chronology(rng, ids)
        walks = chronology_walks(chron)
        for w in walks:
            assert check_chronology(w, chron, complete=True)
        # every accepted random permutation must be a walk
        nodes = list(chron.event_ids())
        for _ in range(300):
            seq = tuple(rng.sample(nodes, rng.randint(1, len(nodes)))) if nodes else ()
            if check_chronology(seq, chron, complete=True):
                assert seq in walks
