import math

import numpy as np
import pytest

from ooscam.astro.kepler import propagate
from ooscam.conjunction.tca import find_tca
from ooscam.scenarios.generator import (LAMBERT_INIT_TABLE, RANDOM_INIT_TABLE, ConjunctionSpec, InfeasibleGeometry,
                                        case_study_start, make_collision_scenario, random_collision_scenario,
                                        random_conjunction_spec)

DAY = 86400.0


def test_case_study_elements(case_study):
    assert case_study_start().mjd2000 == pytest.approx(6598.899988, abs=1e-6)
    assert case_study.target.a == 7208.0
    assert case_study.servicer.a == 7208.0
    assert case_study.debris.a == 7213.0
    assert math.degrees(case_study.target.i) == pytest.approx(324.5)
    assert math.degrees(case_study.servicer.true_anom - case_study.target.true_anom) == pytest.approx(12.0)
    assert math.degrees(case_study.debris.true_anom) == pytest.approx(345.0)
    assert case_study.duration == pytest.approx(2.0 * DAY + 4.8 * 3600.0 + 1.0, abs=1e-3)


@pytest.mark.parametrize("table", [RANDOM_INIT_TABLE, LAMBERT_INIT_TABLE])
def test_published_tables_fit_the_case_study(case_study, table):
    table.check_window(case_study.start, case_study.end)


def test_head_on_collision(case_study):
    spec = ConjunctionSpec(dt_tca=0.5 * DAY, approach_angle=math.pi, vel_ratio=1.0)
    scenario = make_collision_scenario(case_study.target, spec, case_study.start)
    hint = scenario.tca_hint
    assert hint.seconds_since(scenario.start) == pytest.approx(0.5 * DAY, abs=1e-4)
    tca, miss, rel_speed = find_tca(scenario.target, scenario.debris, (hint.shifted(-300.0), hint.shifted(300.0)))
    speed = np.linalg.norm(propagate(scenario.target, hint).v)
    assert miss < 1e-3
    assert rel_speed == pytest.approx(2.0 * speed, rel=1e-6)
    assert abs(tca.seconds_since(hint)) < 1e-2


def test_random_geometries_are_reproduced(case_study, rng):
    for _ in range(100):
        spec = random_conjunction_spec(rng)
        scenario = make_collision_scenario(case_study.target, spec, case_study.start)
        hint = scenario.tca_hint
        tca, miss, _ = find_tca(scenario.target, scenario.debris, (hint.shifted(-300.0), hint.shifted(300.0)))
        assert abs(tca.seconds_since(hint)) < 1.0
        assert miss < 1.0
        at_target = propagate(scenario.target, hint)
        at_debris = propagate(scenario.debris, hint)
        cos_angle = at_target.v @ at_debris.v / (np.linalg.norm(at_target.v) * np.linalg.norm(at_debris.v))
        angle = math.acos(max(-1.0, min(1.0, cos_angle)))
        assert angle == pytest.approx(spec.approach_angle, abs=math.radians(0.5))
        ratio = np.linalg.norm(at_debris.v) / np.linalg.norm(at_target.v)
        assert ratio == pytest.approx(spec.vel_ratio, rel=0.01)


def test_servicer_phase_offset(case_study, collision_scenario, collision_spec):
    offset = collision_scenario.servicer.true_anom - collision_scenario.target.true_anom
    assert math.remainder(offset - collision_spec.phase_offset, 2.0 * math.pi) == pytest.approx(0.0, abs=1e-12)
    assert collision_scenario.provenance["conjunction_spec"] == collision_spec.as_dict()


@pytest.mark.parametrize("vel_ratio", [1.5, 0.5])
def test_infeasible_debris_orbits(case_study, vel_ratio):
    spec = ConjunctionSpec(dt_tca=0.5 * DAY, approach_angle=math.pi / 2, vel_ratio=vel_ratio)
    with pytest.raises(InfeasibleGeometry):
        make_collision_scenario(case_study.target, spec, case_study.start)


def test_collision_after_end_is_infeasible(case_study):
    spec = ConjunctionSpec(dt_tca=3.0 * DAY, approach_angle=math.pi / 2, vel_ratio=1.0)
    with pytest.raises(InfeasibleGeometry):
        make_collision_scenario(case_study.target, spec, case_study.start)


def test_random_scenarios_are_seeded():
    first, again, other = random_collision_scenario(7), random_collision_scenario(7), random_collision_scenario(8)
    assert first.debris == again.debris
    assert first.debris != other.debris
    assert first.name == "random-7"
    assert first.provenance["seed"] == 7


def test_spec_validation_and_dict():
    with pytest.raises(ValueError):
        ConjunctionSpec(dt_tca=0.0, approach_angle=1.0, vel_ratio=1.0)
    with pytest.raises(ValueError):
        ConjunctionSpec(dt_tca=10.0, approach_angle=1.0, vel_ratio=0.0)
    spec = ConjunctionSpec(dt_tca=1000.0, approach_angle=2.0, vel_ratio=1.01, phase_offset=0.2)
    assert ConjunctionSpec.from_dict(spec.as_dict()) == spec
