import numpy as np
import pytest
from conftest import make_state, single_flow, two_short_flows

from pyferry.engine import (
    CONSERVATION_TOLERANCE,
    Allocation,
    Verdict,
    conservation_error,
    initial_state,
    run,
    stability_verdict,
    step,
)
from pyferry.errors import ValidationError
from pyferry.model import Point
from pyferry.scheduler import Scheduler
from pyferry.scheduler.cbmf import CBMFScheduler


class Fixed(Scheduler):
    " Always the same allocation. Counts resets. "

    name = "fixed"

    def __init__(self, alloc):
        self.alloc = alloc
        self.resets = 0

    def reset(self):
        self.resets += 1

    def allocate(self, state, spec):
        return self.alloc


@pytest.mark.parametrize(
    "matrix",
    [
        [[1, 1]],  # two robots at one source
        [[-1, -1]],  # two robots at one sink
        [[0, 1]],  # robot 1 without a node
        [[1], [1]],  # robot at two nodes
        [[2]],
    ],
)
def test_malformed_allocations(matrix):
    with pytest.raises(ValidationError):
        Allocation(matrix)


def test_allocation_slots_and_targets():
    alloc = Allocation([[1, -1, 0], [0, 0, -1]])
    assert alloc.slots() == (0, 2, 3)
    assert alloc.targets() == [(0, True), (0, False), (1, False)]
    assert Allocation.from_slots([0, 2, 3], 2) == alloc
    assert hash(Allocation.from_slots([0, 2, 3], 2)) == hash(alloc)
    with pytest.raises(ValidationError):
        Allocation.from_slots([4], 2)


def test_transfer_from_source():
    spec = single_flow(lam=0.0)
    state = step(make_state([5.0], [[0.0]]), Allocation([[1]]), spec)
    assert state.src_q[0] == pytest.approx(4.0)
    assert state.robot_q[0, 0] == pytest.approx(1.0)
    assert state.t == 1


def test_transfer_is_capped_by_queue():
    spec = single_flow(lam=0.0)
    state = step(make_state([0.3], [[0.0]]), Allocation([[1]]), spec)
    assert state.src_q[0] == pytest.approx(0.0)
    assert state.robot_q[0, 0] == pytest.approx(0.3)


def test_step_does_not_modify_its_input():
    spec = single_flow(lam=0.2)
    before = make_state([5.0], [[0.0]])
    step(before, Allocation([[1]]), spec)
    assert before.src_q[0] == 5.0 and before.t == 0


@pytest.mark.parametrize("start, expected", [(7.0, 5.0), (1.5, 0.0)])
def test_motion_is_clamped_at_the_target(start, expected):
    spec = single_flow(velocity=2.0)
    state = step(make_state([0.0], [[0.0]], robot_pos=[[start, 0.0]]), Allocation([[1]]), spec)
    assert state.robot_point(0) == Point(expected, 0.0)


def test_delivery_at_sink_and_arrivals():
    spec = single_flow(lam=0.25, d=0.0)
    state = step(make_state([0.0], [[3.0]]), Allocation([[-1]]), spec)
    assert state.robot_q[0, 0] == pytest.approx(2.0)
    assert state.delivered[0] == pytest.approx(1.0)
    assert state.src_q[0] == pytest.approx(0.25)
    assert conservation_error(state) < CONSERVATION_TOLERANCE


def test_transfer_happens_at_the_post_move_distance():
    # Starts 3 units away with v=1: transfers at distance 2, rate 1/(1+4).
    spec = single_flow(d=0.0)
    state = step(make_state([5.0], [[0.0]], robot_pos=[[3.0, 0.0]]), Allocation([[1]]), spec)
    assert state.robot_q[0, 0] == pytest.approx(0.2)


def test_dimension_mismatch():
    spec = single_flow()
    with pytest.raises(ValidationError):
        step(make_state([0.0], [[0.0]]), Allocation([[1, -1]]), spec)
    with pytest.raises(ValidationError):
        run(spec, Fixed(Allocation([[1, -1]])), 4)


def test_no_arrivals_keeps_queues_empty():
    spec = two_short_flows([0.0, 0.0])
    metrics = run(spec, CBMFScheduler(), 10)
    assert not metrics.queue_series.any()
    assert metrics.delay == (None, None)
    assert metrics.throughput.tolist() == [0.0, 0.0]
    assert metrics.verdicts == (Verdict.STABLE, Verdict.STABLE)


def test_two_robots_at_coincident_nodes_are_stable():
    spec = single_flow(lam=0.4, d=0.0, n_robots=2, positions=(Point(0, 0), Point(0, 0)))
    metrics = run(spec, CBMFScheduler(), 200, check_invariants=True)
    assert metrics.stable
    assert metrics.delay[0] is not None and metrics.delay[0] > 0


def test_single_robot_is_overloaded_beyond_half_rate():
    spec = single_flow(lam=0.9, d=0.0)
    metrics = run(spec, CBMFScheduler(), 200)
    assert metrics.verdicts == (Verdict.UNSTABLE,)


def test_run_conserves_packets():
    spec = two_short_flows([0.3, 0.45])
    metrics = run(spec, CBMFScheduler(), 40, check_invariants=True)
    assert conservation_error(metrics.final_state) < CONSERVATION_TOLERANCE
    assert metrics.arrived == pytest.approx(spec.lambdas * metrics.horizon_steps)
    assert (metrics.final_state.src_q >= 0).all()
    assert (metrics.final_state.robot_q >= 0).all()


def test_run_is_deterministic():
    spec = two_short_flows([0.3, 0.45])
    first = run(spec, CBMFScheduler(), 20)
    second = run(spec, CBMFScheduler(), 20)
    assert np.array_equal(first.queue_series, second.queue_series)


def test_run_resets_the_scheduler():
    spec = single_flow()
    scheduler = Fixed(Allocation([[1]]))
    run(spec, scheduler, 4)
    run(spec, scheduler, 4)
    assert scheduler.resets == 2


def test_warmup_is_left_out_of_the_averages():
    spec = single_flow(lam=0.1, epoch_len=5)
    metrics = run(spec, Fixed(Allocation([[-1]])), 20, warmup_fraction=0.25)
    assert metrics.warmup_steps == 25
    assert metrics.horizon_steps == 100
    # The robot never visits the source: the queue is lambda * t.
    expected = np.mean(0.1 * np.arange(26, 101))
    assert metrics.avg_queue[0] == pytest.approx(expected)
    assert metrics.delay[0] == pytest.approx(expected / 0.1)
    assert metrics.verdicts == (Verdict.UNSTABLE,)


@pytest.mark.parametrize("horizon, warmup", [(0, 0.0), (10, 1.0), (10, -0.1)])
def test_bad_run_parameters(horizon, warmup):
    with pytest.raises(ValidationError):
        run(single_flow(), CBMFScheduler(), horizon, warmup)


def test_initial_state_uses_spec_positions():
    spec = single_flow(d=4.0, n_robots=2, positions=(Point(4, 0), Point(0, 0)))
    state = initial_state(spec)
    assert state.robot_pos.tolist() == [[4.0, 0.0], [0.0, 0.0]]
    assert state.total_queue().tolist() == [0.0]


def test_stability_verdicts():
    assert stability_verdict([5.0] * 40) is Verdict.STABLE
    assert stability_verdict(np.arange(100, dtype=float)) is Verdict.UNSTABLE
    sawtooth = np.tile(np.arange(10, dtype=float), 200)
    assert stability_verdict(sawtooth) is Verdict.STABLE
    assert stability_verdict([2e6] * 40) is Verdict.UNSTABLE


def test_stability_needs_four_epochs():
    with pytest.raises(ValidationError):
        stability_verdict([0.0] * 30, epoch_len=10)


@pytest.mark.parametrize("horizon", [1, 2, 3])
def test_short_runs_are_not_judged(horizon):
    metrics = run(single_flow(lam=0.1), CBMFScheduler(), horizon)
    assert metrics.verdicts == (None,)
    assert not metrics.stable
    assert metrics.queue_series.shape == (horizon * 10, 1)
    assert run(single_flow(lam=0.1), CBMFScheduler(), 4).verdicts[0] is not None


def test_robot_only_exchanges_packets_of_the_flow_it_serves():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        spec = two_short_flows(rng.uniform(0, 1, 2), n_robots=n)
        state = make_state(rng.uniform(0, 20, 2), rng.uniform(0, 20, (n, 2)), rng.uniform(-2, 6, (n, 2)))
        slots = rng.permutation(4)[:n]
        after = step(state, Allocation.from_slots(slots, 2), spec)
        for j, s in enumerate(slots):
            for i in range(2):
                if s not in (i, 2 + i):
                    assert after.robot_q[j, i] == state.robot_q[j, i]
