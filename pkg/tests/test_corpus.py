import pytest

from tmkit.corpus import FIXTURE_NAMES, FixtureError, golden_outputs, load_fixture
from tmkit.events import check_chronology
from tmkit.model import StageRef
from tmkit.simulator import census_by_thing, recognize_events, simulate
from tmkit.validator import validate_model


def test_unknown_fixture():
    with pytest.raises(FixtureError):
        load_fixture("nope")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_has_basis_and_expectations(name):
    fx = load_fixture(name)
    assert fx.expected["basis"]
    assert [e.id for e in fx.model.events] == fx.expected["events"]
    for key in fx.scenarios:
        assert fx.scenario_expectation(key)["basis"], key


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_golden_files_regenerate(name):
    fx = load_fixture(name)
    fresh = golden_outputs(fx)
    assert fresh == fx.golden


def test_ordering_shape():
    m = load_fixture("ordering").model
    assert [x.name for x in m.machines] == ["Customer", "OrderingSystem", "Supplier"]
    assert len(m.events) == 11


def test_dhl_package_two_flows():
    m = load_fixture("dhl_package").model
    assert {f.thing for f in m.flows} == {"Package", "ReturnedPackage"}
    assert validate_model(m).ok


def test_sun_feeds_region():
    m = load_fixture("sun_warmth").model
    assert [s.name for s in m.machine(("Sun",)).submachines] == ["Sunrise", "Midday", "Sunset"]
    assert all(f.thing == "Warmth" and f.path[-1] == StageRef.parse("Earth.Region.receive")
               for f in m.flows)


def matches(observed, expected, mode):
    if mode == "exact":
        return observed == expected
    if mode == "prefix":
        return observed[: len(expected)] == expected
    it = iter(observed)
    return all(e in it for e in expected)


SCENARIOS = [(n, s) for n in FIXTURE_NAMES for s in load_fixture(n).scenarios]


@pytest.mark.parametrize("name, scenario", SCENARIOS)
def test_scenario_expectations(name, scenario):
    fx = load_fixture(name)
    exp = fx.scenario_expectation(scenario)
    trace = simulate(fx.model, fx.scenarios[scenario])
    occ = recognize_events(trace, fx.model)
    ids = [o.event for o in occ]
    assert matches(ids, exp["events"], exp["match"]), ids
    if fx.model.chronology is not None:
        assert bool(check_chronology(ids, fx.model.chronology)) is exp["chronology_ok"]
    for thing, counts in exp.get("census", {}).items():
        assert census_by_thing(trace)[thing]._asdict() == counts
    for key, value in exp.get("final", {}).items():
        thing, attr = key.split(".")
        assert [p.attribute(attr) for p in trace.live(thing)] == [value]
    for thing, where in exp.get("arrivals", {}).items():
        assert trace.live(thing) and all(p.location == where for p in trace.live(thing))
    if "ticks" in exp:
        assert [o.tick for o in occ] == exp["ticks"]
    if "parked_then_resumed" in exp:
        kinds = [r.kind.value for r in trace.records
                 if r.fields.get("thing") == exp["parked_then_resumed"]
                 and r.kind.value in ("park", "resume")]
        assert kinds == ["park", "resume"]
