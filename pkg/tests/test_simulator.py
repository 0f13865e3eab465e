import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from tmkit.corpus import load_fixture
from tmkit.dsl import parse_model
from tmkit.model import AttrKind, StageKind
from tmkit.simulator import (
    Census,
    Injection,
    RecordKind,
    Scenario,
    ScenarioError,
    SimulationError,
    census_by_thing,
    parse_scenario,
    parse_tsv,
    recognize_events,
    simulate,
    token_census,
)
from tmkit.simulator.engine import InvalidModelError

R = RecordKind

PIPE = """model Pipe {
    thing T { n: int; };
    thing U;
    machine A { stage create; stage release; stage transfer; store after create; }
    machine B { stage transfer; stage receive; stage process; }
    machine C { stage create; stage release; stage transfer; }
    flow F of T : A.create -> A.release -> A.transfer -> B.transfer -> B.receive;
    flow G of U : C.create -> C.release -> C.transfer;
    %s
}"""


def run(body="", scenario="inject 0 T at A.create {n=1}"):
    model = parse_model(PIPE % body)
    return model, simulate(model, parse_scenario(scenario))


def kinds(trace):
    return [(r.tick, r.kind.value, r.subject, r.at) for r in trace.records]


def test_one_edge_per_tick():
    _, trace = run()
    entries = [(r.tick, r.at) for r in trace.records if r.kind is R.ENTER_STAGE]
    assert entries == [(0, "A.create"), (1, "A.release"), (2, "A.transfer"),
                       (3, "B.transfer"), (4, "B.receive")]


def test_token_leaving_boundary_transfer_exits():
    model = parse_model("""model M { thing T;
        machine A { stage create; stage release; stage transfer; }
        flow F of T : A.create -> A.release -> A.transfer; }""")
    trace = simulate(model, parse_scenario("inject 0 T at A.create"))
    assert trace.records[-1].kind is R.EXIT and trace.records[-1].tick == 3
    assert token_census(trace) == Census(created=1, deleted=0, exited=1, live=0)


def test_delayed_trigger_and_created_token_timing():
    body = "trigger t : B.receive -> create U at C.create after 2;"
    _, trace = run(body)
    got = [(r.tick, r.kind) for r in trace.records if r.subject in ("t", "2")]
    assert got[:4] == [(4, R.SCHEDULE), (6, R.TRIGGER_FIRED), (6, R.CREATE), (6, R.ENTER_STAGE)]
    # the scheduled trigger fires first thing in its tick
    fired = next(i for i, r in enumerate(trace.records) if r.kind is R.TRIGGER_FIRED)
    assert all(r.tick >= 6 for r in trace.records[fired:])


def test_cancel_removes_pending_and_warns_when_idle():
    body = """trigger t : B.transfer -> delete U after 10;
              trigger stop : C.release -> cancel t;
              trigger stop2 : C.transfer -> cancel t;"""
    _, trace = run(body, "inject 0 T at A.create {n=1}\ninject 3 U at C.create")
    assert [r.kind for r in trace.records if r.subject == "t"] == [R.SCHEDULE, R.CANCEL]
    warn = [r for r in trace.records if r.is_warning]
    assert len(warn) == 1 and warn[0].kind is R.CANCEL
    assert not any(r.kind is R.TRIGGER_FIRED and r.subject == "t" for r in trace.records)


def test_delete_without_instance_is_a_warning():
    _, trace = run("trigger t : B.receive -> delete U;")
    rec = [r for r in trace.records if r.kind is R.DELETE]
    assert len(rec) == 1 and rec[0].subject == "-" and rec[0].is_warning


def test_set_attr_and_guard():
    body = """trigger t : C.release -> set T.n = T.n * 10 + 2 when T.n == 1;"""
    _, trace = run(body, "inject 0 T at A.create {n=1}\ninject 5 U at C.create")
    assert trace.live("T")[0].attribute("n") == 12
    _, trace = run(body, "inject 0 T at A.create {n=5}\ninject 5 U at C.create")
    assert trace.live("T")[0].attribute("n") == 5


def test_guard_reading_missing_instance_is_positioned_error():
    model = parse_model((PIPE % "trigger t : B.receive -> delete U when V.k > 0;")
                        .replace("thing U;", "thing U; thing V { k: int; };"))
    with pytest.raises(SimulationError) as info:
        simulate(model, parse_scenario("inject 0 T at A.create {n=1}"))
    assert info.value.position is not None and info.value.tick == 4
    assert str(info.value).startswith(f"{info.value.position.line}:")


def test_hold_store_parks_until_resume_fifo():
    model = parse_model("""model M { thing T { n: int; }; thing K;
        machine A { stage create; stage release; stage transfer; store after create hold; }
        machine B { stage create; stage release; stage transfer; }
        flow F of T : A.create -> A.release -> A.transfer;
        flow G of K : B.create -> B.release -> B.transfer;
        trigger go : B.release -> resume T at A.release; }""")
    trace = simulate(model, parse_scenario("""
        inject 0 T at A.create {n=1}
        inject 0 T at A.create {n=2}
        inject 3 K at B.create"""))
    parks = [r.subject for r in trace.records if r.kind is R.PARK]
    resumed = [r for r in trace.records if r.kind is R.RESUME]
    assert parks == ["1", "2"]
    assert [(r.tick, r.subject) for r in resumed] == [(4, "1")]
    assert [p.thing for p in trace.population if p.parked] == ["T"]


def test_unmet_guard_on_stored_stage_parks():
    model = parse_model("""model M { thing T { n: int; }; thing Gate { open: int; };
        machine A { stage create; stage release; stage transfer; store after create; }
        machine W { stage create; stage release; stage transfer; }
        machine Out { stage process; stage release; stage transfer; }
        flow F of T : A.create -> A.release -> A.transfer;
        flow G of Gate : W.create -> W.release -> W.transfer;
        flow H of T : Out.process -> Out.release -> Out.transfer;
        trigger pass : A.create -> resume T at Out.process when Gate.open == 1;
        trigger opened : W.release -> resume T at Out.process; }""")
    trace = simulate(model, parse_scenario("""
        inject 0 Gate at W.create {open=0}
        inject 2 T at A.create {n=1}"""))
    assert any(r.kind is R.PARK and r.at == "A.create" for r in trace.records)
    # W.release was reached at tick 1, before T existed: nothing to resume then
    assert any(r.kind is R.RESUME and r.is_warning for r in trace.records)
    assert trace.live("T")[0].parked


def test_truncation_record():
    model = parse_model("""model M { thing T;
        machine A { stage create; stage release; stage transfer; }
        machine B { stage transfer; stage receive; }
        flow F of T : A.create -> A.release -> A.transfer -> B.transfer -> B.receive; }""")
    trace = simulate(model, parse_scenario("max_ticks 2\ninject 0 T at A.create"))
    assert trace.records[-1].kind is R.TRUNCATE and trace.records[-1].tick == 2


def test_invalid_model_is_refused():
    fx = load_fixture("invalid_adjacency")
    with pytest.raises(InvalidModelError):
        simulate(fx.model, Scenario())


def test_empty_scenario_on_empty_model():
    trace = simulate(parse_model("model M { }"), Scenario())
    assert trace.records == () and token_census(trace) == Census()


@pytest.mark.parametrize("line, fragment", [
    ("inject x T at A.create", "expected"),
    ("inject 0 T at A.creat", "stage kind"),
    ("inject -1 T at A.create", ">= 0"),
    ("max_ticks 0", "positive"),
    ("inject 0 T at A.create {n=1, n=2}", "twice"),
])
def test_scenario_parse_errors(line, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse_scenario("// header\n" + line)


@pytest.mark.parametrize("line, fragment", [
    ("inject 0 Ghost at A.create", "unknown thing"),
    ("inject 0 T at B.receive", "create or transfer"),
    ("inject 0 T at A.create {m=1}", "no attribute"),
    ("inject 0 T at A.create {n=abc}", "int"),
    ("inject 0 T at Z.create", "unknown machine"),
])
def test_scenario_must_fit_model(line, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        simulate(parse_model(PIPE % ""), parse_scenario(line))


def test_scenario_sorted_stably():
    s = parse_scenario("inject 5 T at A.create {n=1}\ninject 0 T at A.create {n=2}\n"
                       "inject 5 T at A.create {n=3}")
    assert [dict(i.attributes)["n"] for i in s.injections] == [2, 1, 3]


def test_tsv_round_trip_and_json():
    fx = load_fixture("ordering")
    trace = simulate(fx.model, fx.scenarios["out_of_stock"])
    assert parse_tsv(trace.to_tsv()) == trace.records
    assert '"live"' in trace.to_json()


def test_census_examples():
    fx = load_fixture("ordering")
    never = simulate(fx.model, fx.scenarios["never_paid"])
    assert census_by_thing(never)["Order"] == Census(created=1, deleted=1, exited=0, live=0)
    assert token_census(simulate(fx.model, Scenario())) == Census()


def test_recognize_empty_trace():
    fx = load_fixture("ordering")
    assert recognize_events(simulate(fx.model, Scenario()), fx.model) == ()


# -- properties over random scenarios on the corpus ----------------------

VALID = ("ordering", "dhl_package", "sun_warmth", "number_machine")
_MODELS = {n: load_fixture(n).model for n in VALID}


@st.composite
def corpus_runs(draw):
    name = draw(st.sampled_from(VALID))
    model = _MODELS[name]
    entries = [r for r in model.stage_refs() if r.stage in (StageKind.CREATE, StageKind.TRANSFER)]
    injections = []
    for _ in range(draw(st.integers(0, 6))):
        thing = model.things[draw(st.integers(0, len(model.things) - 1))]
        attrs = tuple(
            (a.name, draw(st.integers(-3, 12)) if a.kind is AttrKind.INT else draw(st.sampled_from(["", "x"])))
            for a in thing.attributes
        )
        injections.append(Injection(draw(st.integers(0, 15)), thing.name,
                                    draw(st.sampled_from(entries)), attrs))
    return model, Scenario(tuple(injections), draw(st.integers(1, 80)))


def simulate_or_skip(model, scenario):
    try:
        return simulate(model, scenario)
    except SimulationError:
        return None


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(corpus_runs())
def test_run_invariants(run_args):
    model, scenario = run_args
    trace = simulate_or_skip(model, scenario)
    if trace is None:
        return
    # determinism
    assert simulate(model, scenario).to_tsv() == trace.to_tsv()
    # monotone ticks
    ticks = [r.tick for r in trace.records]
    assert ticks == sorted(ticks)
    # conservation per thing type
    for thing, c in census_by_thing(trace).items():
        assert c.created == c.live + c.deleted + c.exited, thing
    # forward progress: no stage revisited between resumes
    visited: dict[str, set[str]] = {}
    for r in trace.records:
        if r.kind is R.RESUME and not r.is_warning:
            visited[r.subject] = set()
        if r.kind is R.ENTER_STAGE:
            seen = visited.setdefault(r.subject, set())
            assert r.at not in seen, r
            seen.add(r.at)
    # cancelled pending triggers never fire for the same bound instance
    cancelled: set[tuple[str, str]] = set()
    for r in trace.records:
        if r.kind is R.CANCEL and not r.is_warning:
            cancelled.add((r.subject, r.fields["bound"]))
        if r.kind is R.TRIGGER_FIRED:
            assert (r.subject, r.fields.get("bound")) not in cancelled


def test_conservation_at_every_prefix():
    fx = load_fixture("ordering")
    trace = simulate(fx.model, fx.scenarios["out_of_stock"])
    live = set()
    for r in trace.records:
        if r.kind is R.CREATE:
            live.add(r.subject)
        elif r.kind in (R.DELETE, R.EXIT) and r.subject != "-":
            live.remove(r.subject)
    assert live == {str(p.id) for p in trace.population}
