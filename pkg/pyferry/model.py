"""
Domain types, planar geometry and the distance dependent rate model.

Everything in here is immutable after construction and shared by the other
modules.
"""
import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

__all__ = [
    "Point",
    "RateForm",
    "RateModel",
    "FlowSpec",
    "NetworkSpec",
    "distance",
    "rate_at",
    "default_layout",
    "transit_fraction",
    "LAYOUT_SPACING",
]

#: Vertical spacing between flows in the default layout.
LAYOUT_SPACING = 50.0


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError("point coordinates must be finite: (%r, %r)" % (self.x, self.y))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


def distance(a: Point, b: Point) -> float:
    " Euclidean distance between two points. "
    return math.hypot(a.x - b.x, a.y - b.y)


class RateForm(enum.Enum):
    #: C * R_max / (C + d ** eta)
    INVERSE_POLYNOMIAL = "inverse_polynomial"
    #: R_max at every distance.
    CONSTANT = "constant"


@dataclass(frozen=True)
class RateModel:
    """
    Maps the distance between a robot and a static node to a transmission
    rate in packets per time step.
    """

    r_max: float = 1.0
    c: float = 1.0
    eta: float = 2.0
    form: RateForm = RateForm.INVERSE_POLYNOMIAL

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r_max) and self.r_max > 0):
            raise ValidationError("r_max must be finite and > 0, got %r" % (self.r_max,))
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValidationError("c must be finite and > 0, got %r" % (self.c,))
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValidationError("eta must be finite and >= 0, got %r" % (self.eta,))

    def rate(self, d: float) -> float:
        return rate_at(self, d)

    def scaled(self, factor: float) -> "RateModel":
        " Same distance profile, rates multiplied by `factor`. "
        return replace(self, r_max=self.r_max * factor)


def rate_at(m: RateModel, d: float) -> float:
    """
    Transmission rate at distance `d`. Equals `m.r_max` at d = 0, strictly
    positive and nonincreasing in `d`.
    """
    if not d >= 0:
        raise ValidationError("distance must be >= 0, got %r" % (d,))
    if m.form is RateForm.CONSTANT or d == 0:
        return m.r_max
    return m.c * m.r_max / (m.c + d ** m.eta)


@dataclass(frozen=True)
class FlowSpec:
    id: int
    src: Point
    sink: Point
    lam: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValidationError("flow %d: lambda must be finite and >= 0, got %r" % (self.id, self.lam))

    @property
    def length(self) -> float:
        return distance(self.src, self.sink)


@dataclass(frozen=True)
class NetworkSpec:
    """
    Static geometry, flows with their arrival rates, and the robot fleet.
    """

    flows: Tuple[FlowSpec, ...]
    n_robots: int
    velocity: float
    epoch_len: int
    rate_model: RateModel = field(default_factory=RateModel)
    initial_robot_positions: Tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "flows", tuple(self.flows))
        if not self.flows:
            raise ValidationError("at least one flow is required (K >= 1)")
        ids = [f.id for f in self.flows]
        if ids != list(range(1, len(ids) + 1)):
            raise ValidationError("flow ids must be distinct and contiguous from 1, got %r" % (ids,))
        k = len(self.flows)
        if self.n_robots < 1:
            raise ValidationError("at least one robot is required, got N=%d" % self.n_robots)
        if self.n_robots > 2 * k:
            raise ValidationError("N ≤ 2K violated: N=%d, K=%d" % (self.n_robots, k))
        if not (math.isfinite(self.velocity) and self.velocity > 0):
            raise ValidationError("velocity must be finite and > 0, got %r" % (self.velocity,))
        if int(self.epoch_len) != self.epoch_len or self.epoch_len < 1:
            raise ValidationError("epoch length must be an integer >= 1, got %r" % (self.epoch_len,))
        object.__setattr__(self, "epoch_len", int(self.epoch_len))

        positions = tuple(self.initial_robot_positions)
        if not positions:
            positions = (self.flows[0].src,) * self.n_robots
        if len(positions) != self.n_robots:
            raise ValidationError(
                "expected %d initial robot positions, got %d" % (self.n_robots, len(positions)))
        object.__setattr__(self, "initial_robot_positions", positions)

    @property
    def n_flows(self) -> int:
        return len(self.flows)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([f.lam for f in self.flows], dtype=float)

    @property
    def static_nodes(self) -> Tuple[Point, ...]:
        return tuple(itertools.chain.from_iterable((f.src, f.sink) for f in self.flows))

    @property
    def d_max(self) -> float:
        " Maximum distance between any two static nodes. "
        return max(
            (distance(a, b) for a, b in itertools.combinations(self.static_nodes, 2)),
            default=0.0,
        )

    def with_lambdas(self, lambdas: Sequence[float]) -> "NetworkSpec":
        if len(lambdas) != self.n_flows:
            raise ValidationError("expected %d arrival rates, got %d" % (self.n_flows, len(lambdas)))
        flows = tuple(replace(f, lam=float(lam)) for f, lam in zip(self.flows, lambdas))
        return replace(self, flows=flows)

    def with_lambda_scale(self, scale: float) -> "NetworkSpec":
        return self.with_lambdas([f.lam * scale for f in self.flows])

    def with_velocity(self, velocity: float) -> "NetworkSpec":
        return replace(self, velocity=float(velocity))

    def with_epoch_len(self, epoch_len: float) -> "NetworkSpec":
        if int(epoch_len) != epoch_len:
            raise ValidationError("epoch length must be an integer, got %r" % (epoch_len,))
        return replace(self, epoch_len=int(epoch_len))


def transit_fraction(spec: NetworkSpec) -> float:
    " Upper bound d/(vT) on the fraction of an epoch spent travelling. "
    return spec.d_max / (spec.velocity * spec.epoch_len)


def default_layout(
    distances: Iterable[float],
    lambdas: Iterable[float],
    n_robots: Optional[int] = None,
    velocity: float = 1.0,
    epoch_len: int = 10,
    rate_model: Optional[RateModel] = None,
    initial_robot_positions: Sequence[Point] = (),
) -> NetworkSpec:
    """
    Place flow i's source at (0, 50 i) and its sink at (d_i, 50 i). Robots
    start at flow 1's source unless positions are given.
    """
    distances = list(distances)
    lambdas = list(lambdas)
    if len(distances) != len(lambdas):
        raise ValidationError("got %d distances but %d arrival rates" % (len(distances), len(lambdas)))
    flows = tuple(
        FlowSpec(
            id=i,
            src=Point(0.0, LAYOUT_SPACING * i),
            sink=Point(float(d), LAYOUT_SPACING * i),
            lam=float(lam),
        )
        for i, (d, lam) in enumerate(zip(distances, lambdas), start=1)
    )
    return NetworkSpec(
        flows=flows,
        n_robots=2 * len(flows) if n_robots is None else n_robots,
        velocity=velocity,
        epoch_len=epoch_len,
        rate_model=rate_model or RateModel(),
        initial_robot_positions=tuple(initial_robot_positions),
    )
