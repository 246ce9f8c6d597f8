import pytest
from hypothesis import given
from hypothesis import strategies as st

from m3rs import DEFAULT_CATALOG, GenSpec, InfeasibleSpec, Mode, generate, relax_start, with_agents
from m3rs.core import earliest_schedule, Route
from m3rs.io import dump_instance


def test_named_like_the_benchmarks():
    inst = generate(GenSpec(20, 2, 0.86))
    assert inst.name == "20-2-0.86"
    assert inst.n_tasks == 20 and inst.fleet.count == 2
    assert inst.horizon == pytest.approx(0.86 * 3600)
    assert inst.fleet.depot == (15.0, 15.0)


def test_same_seed_same_bytes():
    a = dump_instance(generate(GenSpec(12, 3, 0.5, seed=42)))
    b = dump_instance(generate(GenSpec(12, 3, 0.5, seed=42)))
    assert a == b
    c = dump_instance(generate(GenSpec(12, 3, 0.5, seed=43)))
    assert a != c


@given(
    st.integers(1, 25),
    st.integers(1, 4),
    st.sampled_from([0.1, 0.25, 0.46, 0.86, 2.0]),
    st.integers(0, 2**32),
)
def test_generated_instances_are_valid(n, k, hours, seed):
    inst = generate(GenSpec(n, k, hours, seed=seed))
    labels = [m.label for m in DEFAULT_CATALOG]
    for t in inst.tasks:
        assert 0 <= t.x <= 30 and 0 <= t.y <= 30
        assert 1 <= len(t.modes) <= 4
        # strongest first, drawn from the catalog
        idx = [labels.index(m.label) for m in t.modes]
        assert idx == sorted(idx)
        assert 0 <= t.window_start < t.window_end <= inst.horizon + 1e-9
        assert any(t.window_start + m.service_time <= t.window_end for m in t.modes)


def test_mode_sets_cover_all_sizes():
    inst = generate(GenSpec(200, 2, 1.0, seed=3))
    assert {len(t.modes) for t in inst.tasks} == {1, 2, 3, 4}


def test_spec_validation():
    with pytest.raises(InfeasibleSpec):
        GenSpec(0, 1, 1.0)
    with pytest.raises(InfeasibleSpec):
        GenSpec(1, 0, 1.0)
    with pytest.raises(InfeasibleSpec):
        GenSpec(1, 1, 0.0)
    with pytest.raises(InfeasibleSpec):
        GenSpec(1, 1, 1.0, window_width_range=(100.0, 900.0))  # narrower than 240 s
    with pytest.raises(InfeasibleSpec):
        GenSpec(1, 1, 1.0, seed=-1)


def test_unsatisfiable_windows_raise():
    # a 1-minute mission cannot fit any 10-minute service
    spec = GenSpec(1, 1, 1 / 60, mode_catalog=(Mode("long", 600.0, 1.0, 1.0),), window_width_range=(600.0, 900.0))
    with pytest.raises(InfeasibleSpec):
        generate(spec)


def test_variants():
    inst = generate(GenSpec(6, 2, 0.3, seed=1))
    relaxed = relax_start(inst)
    assert all(t.window_start == 0.0 for t in relaxed.tasks)
    assert [t.window_end for t in relaxed.tasks] == [t.window_end for t in inst.tasks]
    assert relaxed.name == inst.name + "/relax"
    more = with_agents(inst, 4)
    assert more.fleet.count == 4 and more.name.endswith("/k4")


def test_singletons_mostly_reachable():
    # the depot sits in the middle of the floor, so lone visits usually fit
    inst = generate(GenSpec(40, 2, 0.86, seed=5))
    ok = sum(
        any(isinstance(earliest_schedule(inst, [(t.id, m)]), Route) for m in range(len(t.modes)))
        for t in inst.tasks
    )
    assert ok >= 30
