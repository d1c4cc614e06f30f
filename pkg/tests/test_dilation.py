import json

import numpy as np
import pytest
from scipy import stats

from core.units import to_si, from_si
from core.mission import DilationBounds, SegmentKind, SEGMENT_ORDER, MissionProfile
from core.trajectory import TrajectoryPoint, Trajectory2D
from core.exceptions import DilationError, ArtifactError
from pipeline._02_dilation import realize_spec, dilate, dilate_all, write_missions, read_missions
from conftest import straight_trajectory

K = SegmentKind


def _turning_trajectory(flight_id=0, speed=44.0):
    """先向东 100 s 再向北 100 s"""
    points = []
    for i in range(101):
        points.append(TrajectoryPoint(speed * i, 0.0, speed, 0.0, float(i)))
    for i in range(1, 101):
        points.append(TrajectoryPoint(speed * 100, speed * i, 0.0, speed, float(100 + i)))
    return Trajectory2D(flight_id, (0.0, 0.0), (points[-1].x, points[-1].y), points)


def test_zero_delta_reproduces_baseline(mission_spec, zero_bounds):
    for flight_id in (0, 1, 99):
        assert realize_spec(mission_spec, zero_bounds, flight_id) == mission_spec.segments


def test_realized_altitudes_never_change(mission_spec, default_bounds):
    for flight_id in range(50):
        realized = realize_spec(mission_spec, default_bounds, flight_id)
        assert [s.end_altitude for s in realized] == [s.end_altitude for s in mission_spec.segments]
        assert realized[SEGMENT_ORDER.index(K.Cruise)].end_altitude == pytest.approx(457.2)


def test_zero_mu_stays_zero(mission_spec, default_bounds):
    realized = realize_spec(mission_spec, default_bounds, 3)
    hover = realized[SEGMENT_ORDER.index(K.HoverClimb)]
    assert hover.vertical_speed.start == 0.0
    assert hover.horizontal_speed.start == hover.horizontal_speed.end == 0.0
    assert realized[SEGMENT_ORDER.index(K.Cruise)].vertical_speed.start == 0.0


def test_cruise_speed_draws_are_uniform(mission_spec):
    bounds = DilationBounds(delta_vertical=0.0, delta_horizontal=to_si(10, 'mph'))
    idx = SEGMENT_ORDER.index(K.Cruise)
    draws = np.array([from_si(realize_spec(mission_spec, bounds, i)[idx].horizontal_speed.start, 'mph')
                      for i in range(10_000)])
    assert draws.min() >= 100.0 - 1e-9
    assert draws.max() <= 120.0 + 1e-9
    assert abs(draws.mean() - 110.0) < 1.0
    assert stats.kstest(draws, 'uniform', args=(100.0, 20.0)).pvalue > 0.01


def test_draws_depend_on_flight_and_seed(mission_spec, default_bounds):
    a = realize_spec(mission_spec, default_bounds, 1)
    assert a == realize_spec(mission_spec, default_bounds, 1)
    assert a != realize_spec(mission_spec, default_bounds, 2)
    other_seed = DilationBounds(default_bounds.delta_vertical, default_bounds.delta_horizontal, rng_seed=9)
    assert a != realize_spec(mission_spec, other_seed, 1)


def test_dilate_produces_nine_ordered_segments(mission_spec, zero_bounds, vehicle):
    profile = dilate(straight_trajectory(0, 10_000), mission_spec, zero_bounds, vehicle)
    assert tuple(s.kind for s in profile.segments) == SEGMENT_ORDER
    assert profile.segments[0].start_time == 0.0
    assert profile.segments[-1].end_altitude == 0.0


def test_hover_climb_duration(mission_spec, zero_bounds, vehicle):
    profile = dilate(straight_trajectory(0, 10_000), mission_spec, zero_bounds, vehicle)
    assert profile.segment(K.HoverClimb).duration == pytest.approx(12.0, abs=0.1)
    assert float(profile.segment(K.HoverClimb).altitude_at(12.0)) == pytest.approx(to_si(50, 'ft'), abs=0.01)


def test_cruise_keeps_trajectory_at_cruise_altitude(mission_spec, zero_bounds, vehicle):
    traj = straight_trajectory(4, 10_000, heading=0.3, start=(-2000.0, 500.0))
    cruise = dilate(traj, mission_spec, zero_bounds, vehicle).segment(K.Cruise)
    assert len(cruise.waypoints) == len(traj)
    for wp, p in zip(cruise.waypoints, traj.points):
        assert wp.z == pytest.approx(457.2)
        assert (wp.x, wp.y, wp.vx, wp.vy, wp.t) == (p.x, p.y, p.vx, p.vy, p.t)
    assert cruise.duration == pytest.approx(traj.arrival_time - traj.departure_time)


def test_terminal_speeds_join_cruise(mission_spec, default_bounds, vehicle):
    traj = straight_trajectory(7, 15_000)
    profile = dilate(traj, mission_spec, default_bounds, vehicle)
    realized = realize_spec(mission_spec, default_bounds, 7)
    speeds = {s.kind: s.horizontal_speed for s in realized}
    v_transition = min(speeds[K.TransitionClimb].end, vehicle.v_wingborne)
    v_dep = speeds[K.DepartureTerminalProcedure].start

    departure = profile.segment(K.DepartureTerminalProcedure)
    assert departure.horizontal[0][1] == pytest.approx(v_transition)
    assert departure.horizontal[-1][1] == pytest.approx(v_dep)
    assert profile.segment(K.TransitionClimb).horizontal[-1][1] == pytest.approx(v_transition)
    accel = profile.segment(K.AccelClimb)
    assert accel.horizontal[0][1] == pytest.approx(v_dep)
    assert accel.horizontal[-1][1] == pytest.approx(traj.points[0].speed)
    decel = profile.segment(K.DecelDescend)
    assert decel.horizontal[0][1] == pytest.approx(traj.points[-1].speed)
    v_decel = min(speeds[K.DecelDescend].end, vehicle.design_speed)
    assert decel.horizontal[-1][1] == pytest.approx(v_decel)
    arrival = profile.segment(K.ArrivalTerminalProcedure)
    assert arrival.horizontal[0][1] == pytest.approx(v_decel)
    assert arrival.horizontal[-1][1] == pytest.approx(
        min(speeds[K.ArrivalTerminalProcedure].start, vehicle.design_speed))
    assert profile.segment(K.HoverDescend).horizontal[-1][1] == 0.0


def test_transition_draw_below_wingborne_is_flown(mission_spec, default_bounds, vehicle):
    idx = SEGMENT_ORDER.index(K.TransitionClimb)
    flight_id = next(i for i in range(100)
                     if realize_spec(mission_spec, default_bounds, i)[idx].horizontal_speed.end
                     < vehicle.v_wingborne - 0.5)
    draw = realize_spec(mission_spec, default_bounds, flight_id)[idx].horizontal_speed.end
    traj = straight_trajectory(flight_id, 10_000)
    flown = dilate(traj, mission_spec, default_bounds, vehicle)
    baseline = dilate(traj, mission_spec, DilationBounds(0.0, 0.0), vehicle)

    assert flown.segment(K.TransitionClimb).horizontal[-1][1] == pytest.approx(draw)
    assert baseline.segment(K.TransitionClimb).horizontal[-1][1] == pytest.approx(vehicle.v_wingborne)
    assert flown.segment(K.DepartureTerminalProcedure).horizontal[0][1] == pytest.approx(draw)


def test_arrival_draws_are_capped_at_design_speed(mission_spec, vehicle):
    bounds = DilationBounds(delta_vertical=0.0, delta_horizontal=to_si(30, 'mph'))
    for flight_id in range(30):
        profile = dilate(straight_trajectory(flight_id, 8_000), mission_spec, bounds, vehicle)
        assert profile.segment(K.DecelDescend).horizontal[-1][1] <= vehicle.design_speed + 1e-9
        assert profile.segment(K.ArrivalTerminalProcedure).horizontal[-1][1] <= vehicle.design_speed + 1e-9
        assert profile.segment(K.TransitionClimb).horizontal[-1][1] <= vehicle.v_wingborne + 1e-9


def test_randomized_profiles_stay_continuous(mission_spec, default_bounds, vehicle):
    for flight_id in range(40):
        profile = dilate(straight_trajectory(flight_id, 8_000), mission_spec, default_bounds, vehicle)
        profile.check_invariants()
        for prev, nxt in zip(profile.segments[:-1], profile.segments[1:]):
            assert float(prev.altitude_at(prev.duration)) == pytest.approx(nxt.start_altitude, abs=0.1)
            assert float(prev.horizontal_speed_at(prev.duration)) == pytest.approx(
                float(nxt.horizontal_speed_at(0.0)), abs=0.1)


def test_cruise_range_follows_ground_track(mission_spec, zero_bounds, vehicle):
    profile = dilate(_turning_trajectory(), mission_spec, zero_bounds, vehicle)
    assert profile.cruise_range == pytest.approx(2 * 100 * 44.0)


def test_single_waypoint_is_rejected(mission_spec, zero_bounds, vehicle):
    traj = Trajectory2D(5, (0.0, 0.0), (100.0, 0.0), [TrajectoryPoint(0.0, 0.0, 44.0, 0.0, 0.0)])
    with pytest.raises(DilationError) as e:
        dilate(traj, mission_spec, zero_bounds, vehicle)
    assert e.value.flight_id == 5


def test_dilate_all_keeps_order(mission_spec, default_bounds, vehicle):
    trajs = [straight_trajectory(i, 6_000) for i in (3, 1, 2)]
    profiles = dilate_all(trajs, mission_spec, default_bounds, vehicle)
    assert [p.flight_id for p in profiles] == [3, 1, 2]
    assert len(dilate_all(trajs[:1], mission_spec, default_bounds, vehicle)) == 1
    with pytest.raises(DilationError):
        dilate_all([], mission_spec, default_bounds, vehicle)


def test_dilate_all_is_deterministic(mission_spec, default_bounds, vehicle):
    trajs = [straight_trajectory(i, 6_000 + 500 * i) for i in range(5)]
    first = json.dumps([p.to_dict() for p in dilate_all(trajs, mission_spec, default_bounds, vehicle)])
    second = json.dumps([p.to_dict() for p in dilate_all(trajs, mission_spec, default_bounds, vehicle)])
    assert first == second


def test_missions_survive_disk(tmp_path, mission_spec, default_bounds, vehicle):
    profiles = dilate_all([straight_trajectory(i, 7_000) for i in range(3)], mission_spec, default_bounds, vehicle)
    index_path = write_missions(profiles, tmp_path / 'missions', {'seed': 1})
    index, loaded = read_missions(index_path)
    assert index['seed'] == 1
    assert [e['file'] for e in index['missions']] == ['flight_0000.json', 'flight_0001.json', 'flight_0002.json']
    assert [p.to_dict() for p in loaded] == [p.to_dict() for p in profiles]


def test_broken_mission_file_is_reported(tmp_path, mission_spec, zero_bounds, vehicle):
    profiles = [dilate(straight_trajectory(0, 7_000), mission_spec, zero_bounds, vehicle)]
    index_path = write_missions(profiles, tmp_path, {})
    (tmp_path / 'flight_0000.json').write_text('{"flight_id": 0}\n', encoding='utf-8')
    with pytest.raises(ArtifactError) as e:
        read_missions(index_path)
    assert 'flight_0000.json' in str(e.value)


def test_profile_from_dict_restores_realized_spec(mission_spec, default_bounds, vehicle):
    profile = dilate(straight_trajectory(2, 7_000), mission_spec, default_bounds, vehicle)
    again = MissionProfile.from_dict(json.loads(json.dumps(profile.to_dict())))
    assert [s.spec for s in again.segments] == list(realize_spec(mission_spec, default_bounds, 2))
