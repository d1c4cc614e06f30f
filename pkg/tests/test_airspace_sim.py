import itertools
from dataclasses import replace

import numpy as np
import pytest

from core.agent import Agent, Phase
from core.config import SimConfig
from core.exceptions import SimulationError, ConfigError, UsageError
from core.resolution import get_resolution
from core.trajectory import TrajectoryPoint
from feed.demand_feed import PoissonDemand, ScheduledDemand
from strategies.mvp import cpa, mvp_resolve
from pipeline._01_airspace_sim import (access_control, step, WorldState, AirspaceSimulator,
                                       run_scenario)


def _point(x, y, vx, vy, t=0.0):
    return TrajectoryPoint(float(x), float(y), float(vx), float(vy), float(t))


def _airborne(agent_id, origin, destination, velocity=(0.0, 0.0)):
    agent = Agent(agent_id, origin, destination, 0.0)
    agent.state = _point(origin[0], origin[1], *velocity)
    agent.phase = Phase.AIRBORNE
    return agent


def _simulate(flights, cfg=None):
    cfg = cfg or SimConfig()
    sim = AirspaceSimulator(cfg)
    trajs = sim.run(ScheduledDemand(flights).generate())
    return sim, trajs


def _min_pairwise_separation(trajs):
    """同一时刻两两距离的最小值"""
    by_time = [{p.t: p.position for p in tr.points} for tr in trajs]
    best = np.inf
    for a, b in itertools.combinations(by_time, 2):
        for t in a.keys() & b.keys():
            best = min(best, float(np.hypot(*(a[t] - b[t]))))
    return best


# ---------------------------------------------------------------- cpa

def test_cpa_head_on():
    pred = cpa(_point(0, 0, 50, 0), _point(10000, 0, -50, 0))
    assert pred.t_cpa == pytest.approx(100.0)
    assert pred.d_cpa == pytest.approx(0.0, abs=1e-9)


def test_cpa_zero_relative_velocity():
    pred = cpa(_point(0, 0, 50, 0), _point(0, 1000, 50, 0))
    assert pred.t_cpa == 0.0
    assert pred.d_cpa == pytest.approx(1000.0)


def test_cpa_crossing():
    pred = cpa(_point(0, 0, 50, 0), _point(6000, -5000, 0, 50))
    assert pred.t_cpa == pytest.approx(110.0)
    assert pred.d_cpa == pytest.approx(707.1, abs=0.1)


def test_cpa_diverging_is_now():
    pred = cpa(_point(0, 0, -50, 0), _point(1000, 0, 50, 0), intruder_id=7)
    assert pred.intruder_id == 7
    assert pred.t_cpa == 0.0
    assert pred.d_cpa == pytest.approx(1000.0)


def test_cpa_matches_brute_force_sampling():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        own = _point(*rng.uniform(-20000, 20000, 2), *rng.uniform(-45, 45, 2))
        other = _point(*rng.uniform(-20000, 20000, 2), *rng.uniform(-45, 45, 2))
        pred = cpa(own, other)

        d = other.position - own.position
        w = other.velocity - own.velocity
        horizon = max(600.0, pred.t_cpa + 10.0)
        t = np.arange(0.0, horizon + 0.05, 0.1)
        rel = d[None, :] + w[None, :] * t[:, None]
        dist2 = np.sum(rel * rel, axis=1)
        k = int(np.argmin(dist2))

        assert pred.d_cpa == pytest.approx(np.sqrt(dist2[k]), abs=1.0)
        if np.hypot(*w) > 1.0:
            assert abs(pred.t_cpa - t[k]) <= 1.0


# ---------------------------------------------------------------- mvp

def test_mvp_without_neighbors_flies_direct(sim_cfg):
    own = _airborne(0, (0.0, 0.0), (3000.0, 4000.0))
    v = mvp_resolve(own, [], sim_cfg)
    assert v == pytest.approx([0.6 * sim_cfg.max_speed, 0.8 * sim_cfg.max_speed])


def test_mvp_ignores_neighbor_beyond_zone(sim_cfg):
    own = _airborne(0, (0.0, 0.0), (20000.0, 0.0))
    other = _airborne(1, (3000.0, 2 * sim_cfg.min_separation), (-17000.0, 2 * sim_cfg.min_separation))
    v = mvp_resolve(own, [other], sim_cfg)
    assert v == pytest.approx(own.preferred_velocity(sim_cfg.max_speed))


def test_mvp_pushes_pair_apart(sim_cfg):
    a = _airborne(0, (0.0, 0.0), (20000.0, 0.0))
    b = _airborne(1, (3000.0, 200.0), (-17000.0, 200.0))
    va = mvp_resolve(a, [b], sim_cfg)
    vb = mvp_resolve(b, [a], sim_cfg)
    assert va[1] < 0 < vb[1]
    assert np.hypot(*va) <= sim_cfg.max_speed + 1e-9
    assert np.hypot(*vb) <= sim_cfg.max_speed + 1e-9


def test_mvp_triggers_below_min_separation_only(sim_cfg):
    own = _airborne(0, (0.0, 0.0), (20000.0, 0.0))
    v_pref = own.preferred_velocity(sim_cfg.max_speed)
    clear = _airborne(1, (4000.0, 520.0), (-20000.0, 520.0))
    pred = cpa(_point(0.0, 0.0, *v_pref), _point(4000.0, 520.0, *clear.preferred_velocity(sim_cfg.max_speed)))
    assert pred.d_cpa == pytest.approx(520.0)
    assert pred.t_cpa < sim_cfg.lookahead
    assert mvp_resolve(own, [clear], sim_cfg) == pytest.approx(v_pref)

    close = _airborne(1, (4000.0, 480.0), (-20000.0, 480.0))
    v = mvp_resolve(own, [close], sim_cfg)
    assert v[1] < 0


def test_mvp_coincident_cpa_splits_both_ways(sim_cfg):
    a = _airborne(0, (-2000.0, 0.0), (20000.0, 0.0))
    b = _airborne(1, (2000.0, 0.0), (-20000.0, 0.0))
    va = mvp_resolve(a, [b], sim_cfg)
    vb = mvp_resolve(b, [a], sim_cfg)
    assert va[1] == pytest.approx(-vb[1])
    assert abs(va[1]) > 0


def test_resolution_registry(sim_cfg):
    assert get_resolution('mvp', sim_cfg).name == 'MVP'
    off = get_resolution('OFF', sim_cfg)
    own = _airborne(0, (0.0, 0.0), (1000.0, 0.0))
    other = _airborne(1, (500.0, 0.0), (-1000.0, 0.0))
    assert off.resolve(own, [other]) == pytest.approx([sim_cfg.max_speed, 0.0])
    with pytest.raises(ConfigError):
        get_resolution('potential-field', sim_cfg)


# ---------------------------------------------------------------- access control

def test_access_granted_in_empty_airspace(sim_cfg):
    candidate = Agent(0, (0.0, 0.0), (20000.0, 0.0), 0.0)
    assert access_control(candidate, [], sim_cfg)


def test_access_denied_next_to_hovering_agent(sim_cfg):
    candidate = Agent(0, (0.0, 0.0), (20000.0, 0.0), 0.0)
    hovering = _airborne(1, (100.0, 0.0), (100.0, 9000.0))
    assert not access_control(candidate, [hovering], sim_cfg)


def test_access_denied_for_predicted_conflict(sim_cfg):
    # 入侵机约 4 km 外以 45 m/s 向北飞，约 62 s 后与起飞航迹相距 300 m
    x0 = 3000.0
    y0 = 300.0 * np.sqrt(2.0) - x0
    speed = sim_cfg.max_speed
    crossing = _airborne(1, (x0, y0), (x0, 20000.0), velocity=(0.0, speed))
    candidate = Agent(0, (0.0, 0.0), (20000.0, 0.0), 0.0)

    departing = _point(0, 0, speed, 0)
    pred = cpa(departing, crossing.state)
    assert 3500 < np.hypot(x0, y0) < 4500
    assert pred.t_cpa < sim_cfg.lookahead
    assert pred.d_cpa == pytest.approx(300.0, abs=1.0)
    assert not access_control(candidate, [crossing], sim_cfg)


def test_access_granted_when_conflict_beyond_lookahead(sim_cfg):
    candidate = Agent(0, (0.0, 0.0), (20000.0, 0.0), 0.0)
    far = _airborne(1, (15000.0, 0.0), (-5000.0, 0.0), velocity=(-sim_cfg.max_speed, 0.0))
    assert access_control(candidate, [far], sim_cfg)


# ---------------------------------------------------------------- step

def test_step_advances_by_velocity_times_tick(sim_cfg):
    agent = _airborne(0, (0.0, 0.0), (20000.0, 0.0), velocity=(sim_cfg.max_speed, 0.0))
    world = WorldState(t=0.0, pending=[], active=[agent])
    step(world, sim_cfg, get_resolution('MVP', sim_cfg))
    assert world.t == sim_cfg.tick
    assert agent.state.x == pytest.approx(sim_cfg.max_speed * sim_cfg.tick)
    assert agent.state.y == pytest.approx(0.0)
    assert agent.history[-1].t == sim_cfg.tick


def test_step_marks_arrival(sim_cfg):
    agent = _airborne(0, (0.0, 0.0), (20000.0, 0.0))
    agent.state = _point(19980.0, 0.0, sim_cfg.max_speed, 0.0)
    world = WorldState(t=0.0, pending=[], active=[agent])
    step(world, sim_cfg, get_resolution('MVP', sim_cfg))
    assert agent.phase is Phase.ARRIVED
    assert world.arrived == [agent]
    assert world.done


def test_step_departs_due_requests_only(sim_cfg):
    early = Agent(0, (0.0, 0.0), (20000.0, 0.0), 0.5)
    late = Agent(1, (-10000.0, -10000.0), (0.0, -10000.0), 100.0)
    world = WorldState(t=0.0, pending=[early, late])
    step(world, sim_cfg, get_resolution('MVP', sim_cfg))
    assert [a.id for a in world.active] == [0]
    assert [a.id for a in world.pending] == [1]
    assert early.history[0].t == sim_cfg.tick


# ---------------------------------------------------------------- scenarios

def test_single_flight_flies_straight(sim_cfg):
    _, trajs = _simulate([((-5000.0, 1000.0), (7000.0, -4000.0), 0.0)], sim_cfg)
    assert len(trajs) == 1
    xy = trajs[0].to_frame()[['x_m', 'y_m']].to_numpy()
    direction = np.array([12000.0, -5000.0]) / 13000.0
    offsets = (xy - xy[0]) @ np.array([-direction[1], direction[0]])
    assert np.max(np.abs(offsets)) < 1e-6
    assert np.hypot(*(xy[-1] - [7000.0, -4000.0])) <= sim_cfg.arrival_threshold
    assert trajs[0].points[0].t == 0.0


def test_head_on_encounter_keeps_separation(sim_cfg):
    sim, trajs = _simulate([((-6000.0, 0.0), (14000.0, 0.0), 0.0),
                            ((6000.0, 0.0), (-14000.0, 0.0), 0.0)], sim_cfg)
    assert len(trajs) == 2
    assert _min_pairwise_separation(trajs) >= sim_cfg.min_separation
    assert sim.stats.loss_of_separation == 0


def test_right_angle_crossing_keeps_separation(sim_cfg):
    _, trajs = _simulate([((-6000.0, 0.0), (14000.0, 0.0), 0.0),
                          ((0.0, -6000.0), (0.0, 14000.0), 0.0)], sim_cfg)
    assert _min_pairwise_separation(trajs) >= sim_cfg.min_separation


def test_converging_30_degrees_keeps_separation(sim_cfg):
    angle = np.radians(30.0)
    start = (-6000.0 * np.cos(angle), -6000.0 * np.sin(angle))
    end = (14000.0 * np.cos(angle), 14000.0 * np.sin(angle))
    _, trajs = _simulate([((-6000.0, 0.0), (14000.0, 0.0), 0.0), (start, end, 0.0)], sim_cfg)
    assert _min_pairwise_separation(trajs) >= sim_cfg.min_separation


def test_overtaking_encounter_keeps_separation(sim_cfg):
    # 后机同航迹跟进，前机被横穿的入侵机逼偏后放慢沿航迹速度，后机从后方追上
    flights = [((-6000.0, 0.0), (14000.0, 0.0), 0.0),
               ((4000.0, -8000.0), (4000.0, 12000.0), 0.0),
               ((-6000.0, 0.0), (14000.0, 0.0), 30.0)]
    sim, trajs = _simulate(flights, sim_cfg)
    assert len(trajs) == 3
    assert trajs[2].departure_time > trajs[0].departure_time
    assert _min_pairwise_separation(trajs) >= sim_cfg.min_separation
    assert sim.stats.loss_of_separation == 0


def test_four_way_cross_keeps_separation(sim_cfg):
    r = 10000.0
    flights = [((-r, 0.0), (r, 0.0), 0.0), ((r, 0.0), (-r, 0.0), 0.0),
               ((0.0, -r), (0.0, r), 0.0), ((0.0, r), (0.0, -r), 0.0)]
    _, trajs = _simulate(flights, sim_cfg)
    assert [t.flight_id for t in trajs] == [0, 1, 2, 3]
    for traj, (_, dest, _) in zip(trajs, flights):
        assert np.hypot(traj.points[-1].x - dest[0], traj.points[-1].y - dest[1]) <= sim_cfg.arrival_threshold
    assert _min_pairwise_separation(trajs) >= sim_cfg.min_separation


def test_denied_departure_waits(sim_cfg):
    sim, trajs = _simulate([((0.0, 0.0), (20000.0, 0.0), 0.0),
                            ((100.0, 0.0), (100.0, 20000.0), 0.0)], sim_cfg)
    assert sim.stats.denied_departures > 0
    assert trajs[1].departure_time > trajs[0].departure_time


def test_scenario_is_deterministic():
    cfg = replace(SimConfig(), n_flights=8)
    first = run_scenario(PoissonDemand.from_config(cfg, 11), cfg)
    second = run_scenario(PoissonDemand.from_config(cfg, 11), cfg)
    assert len(first) == len(second) == 8
    for a, b in zip(first, second):
        assert a.flight_id == b.flight_id
        assert a.to_frame().equals(b.to_frame())


def test_trajectories_respect_speed_and_area():
    cfg = replace(SimConfig(), n_flights=20)
    trajs = run_scenario(PoissonDemand.from_config(cfg, 3), cfg)
    half = 0.5 * cfg.area_side
    for traj in trajs:
        df = traj.to_frame()
        assert np.all(np.hypot(df['vx_mps'], df['vy_mps']) <= cfg.max_speed + 1e-9)
        assert np.all(np.abs(df[['x_m', 'y_m']].to_numpy()) <= half + cfg.max_speed * cfg.tick)
        assert np.all(np.diff(df['t_s']) > 0)
        assert traj.departure_time >= 0


def test_poisson_demand_is_reproducible():
    cfg = SimConfig()
    a = PoissonDemand.from_config(cfg, 5).generate(50)
    b = PoissonDemand.from_config(cfg, 5).generate(50)
    assert a == b
    assert a[0].requested_departure == 0.0
    times = [r.requested_departure for r in a]
    assert times == sorted(times)
    for r in a:
        assert np.hypot(r.destination[0] - r.origin[0], r.destination[1] - r.origin[1]) >= cfg.min_od_distance
        assert max(abs(c) for c in r.origin + r.destination) <= 0.5 * cfg.area_side


def test_horizon_exceeded_raises():
    cfg = replace(SimConfig(), horizon=10.0)
    with pytest.raises(SimulationError):
        _simulate([((0.0, 0.0), (20000.0, 0.0), 0.0)], cfg)


def test_request_outside_area_is_rejected(sim_cfg):
    with pytest.raises(ConfigError) as e:
        _simulate([((0.0, 0.0), (40000.0, 0.0), 0.0)], sim_cfg)
    assert e.value.field == 'sim.area_side'


def test_empty_scenario_is_a_usage_error(sim_cfg):
    with pytest.raises(UsageError):
        AirspaceSimulator(sim_cfg).run([])


@pytest.mark.slow
def test_full_scale_scenario_count():
    cfg = SimConfig()
    trajs = run_scenario(PoissonDemand.from_config(cfg, 42), cfg)
    assert len(trajs) == 262
    assert [t.flight_id for t in trajs] == list(range(262))
