import json

import numpy as np
import pytest

from pyferry.engine import SimState
from pyferry.model import FlowSpec, NetworkSpec, Point, RateModel


def make_state(src_q, robot_q, robot_pos=None) -> SimState:
    """
    A state with the given queues (robot_q is N x K) and every robot at the
    origin unless positions are given.
    """
    src_q = np.array(src_q, dtype=float)
    robot_q = np.array(robot_q, dtype=float).reshape(-1, src_q.size)
    n = robot_q.shape[0]
    pos = np.zeros((n, 2)) if robot_pos is None else np.array(robot_pos, dtype=float)
    return SimState(
        t=0,
        robot_pos=pos,
        src_q=src_q,
        robot_q=robot_q,
        delivered=np.zeros(src_q.size),
        arrived=src_q + robot_q.sum(axis=0),
    )


def single_flow(lam=0.0, d=0.0, n_robots=1, velocity=1.0, epoch_len=10, positions=(), rate_model=None):
    src, sink = Point(0.0, 0.0), Point(float(d), 0.0)
    return NetworkSpec(
        flows=(FlowSpec(1, src, sink, lam),),
        n_robots=n_robots,
        velocity=velocity,
        epoch_len=epoch_len,
        rate_model=rate_model or RateModel(),
        initial_robot_positions=tuple(positions),
    )


def two_short_flows(lambdas, n_robots=4, velocity=1.0, epoch_len=25):
    """
    K = 2 with sources and sinks a few units apart, so that d/(vT) stays
    below 0.2 with the default velocity and epoch length.
    """
    flows = (
        FlowSpec(1, Point(0.0, 0.0), Point(2.0, 0.0), float(lambdas[0])),
        FlowSpec(2, Point(0.0, 2.0), Point(4.0, 2.0), float(lambdas[1])),
    )
    return NetworkSpec(flows=flows, n_robots=n_robots, velocity=velocity, epoch_len=epoch_len)


@pytest.fixture
def rate_model():
    return RateModel(r_max=1.0, c=1.0, eta=2.0)


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture
def basic_config():
    return {
        "network": {
            "flows": [{"lambda": 0.05, "distance": 5.0}, {"lambda": 0.05, "distance": 10.0}],
            "velocity": 2.0,
            "epoch_len": 50,
        },
        "horizon_epochs": 20,
        "warmup_fraction": 0.1,
    }
