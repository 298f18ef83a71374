"""Network model: nodes, geometry, deployment and the radio energy accounting.

Every protocol in this package charges transmit/receive/aggregation costs
against the same first-order radio model: a fixed per-bit electronics cost
plus a d^2 amplifier term on the transmit side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# rounds_since_ch value meaning "never served"; any value this large keeps a
# fresh node eligible for election under every practical rotation period.
NEVER_CLUSTER_HEAD = 1 << 30


@dataclass(frozen=True)
class Position:
    """A point in the deployment plane, in meters."""

    x: float
    y: float


@dataclass
class Node:
    """One sensor node. A node is alive exactly while its energy is > 0."""

    id: int
    pos: Position
    energy: float
    alive: bool = True
    rounds_since_ch: int = NEVER_CLUSTER_HEAD


@dataclass(frozen=True)
class RadioModel:
    """Per-bit energy constants of the radio and aggregation hardware.

    e_elec applies to both transmit and receive electronics, e_amp to the
    transmit amplifier (scaled by distance squared), e_da to aggregating one
    input signal. Message sizes are carried here so callers charge data and
    control traffic consistently.
    """

    e_elec: float = 50e-9  # J/bit
    e_amp: float = 100e-12  # J/bit/m^2
    e_da: float = 5e-9  # J/bit per aggregated signal
    data_bits: int = 4000  # 500-byte data message
    header_bits: int = 200  # 25-byte header / control message

    def __post_init__(self):
        if min(self.e_elec, self.e_amp, self.e_da) < 0:
            raise ValueError("radio energy constants must be >= 0")
        if not 0 < self.header_bits < self.data_bits:
            raise ValueError("require data_bits > header_bits > 0")


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment scenario: arena, population, base station and energy budget."""

    n_nodes: int = 100
    arena: tuple[float, float] = (100.0, 100.0)
    bs_pos: Position = field(default_factory=lambda: Position(50.0, 175.0))
    initial_energy: float = 0.5  # joules
    radio: RadioModel = field(default_factory=RadioModel)
    seed: int = 1

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.arena[0] <= 0 or self.arena[1] <= 0:
            raise ValueError("arena dimensions must be > 0")
        if self.initial_energy <= 0:
            raise ValueError("initial_energy must be > 0")

    @property
    def diagonal(self) -> float:
        """Arena diagonal, the broadcast range that reaches every node."""
        return math.hypot(self.arena[0], self.arena[1])


def euclidean_distance(a: Position, b: Position) -> float:
    """Plane distance between two positions, in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def deploy_nodes(config: NetworkConfig, rng: np.random.Generator | None = None) -> list[Node]:
    """Scatter n_nodes uniformly over the arena.

    Positions come from ``rng`` when given, otherwise from a fresh generator
    seeded with ``config.seed``; equal seeds give bit-identical layouts.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    width, height = config.arena
    xs = rng.uniform(0.0, width, config.n_nodes)
    ys = rng.uniform(0.0, height, config.n_nodes)
    return [
        Node(id=i, pos=Position(float(xs[i]), float(ys[i])), energy=config.initial_energy)
        for i in range(config.n_nodes)
    ]


def tx_energy(radio: RadioModel, bits: int, d: float) -> float:
    """Energy to transmit ``bits`` over distance ``d``: electronics + d^2 amplifier."""
    return radio.e_elec * bits + radio.e_amp * bits * d * d


def rx_energy(radio: RadioModel, bits: int) -> float:
    """Energy to receive ``bits``; distance-independent."""
    return radio.e_elec * bits


def aggregate_energy(radio: RadioModel, bits: int, n_signals: int) -> float:
    """Energy for a cluster head to fuse ``n_signals`` messages of ``bits`` each."""
    return radio.e_da * bits * n_signals


def consume(node: Node, cost: float) -> Node:
    """Charge ``cost`` joules to ``node``, clamping at zero.

    A node whose energy reaches zero is dead from that point on; the energy
    that could not be paid is simply lost (the transmission it would have
    funded is considered failed).
    """
    if cost < 0:
        raise ValueError("cost must be >= 0")
    remaining = node.energy - cost
    node.energy = remaining if remaining > 0 else 0.0
    node.alive = node.energy > 0
    return node
