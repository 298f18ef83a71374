"""Round-based simulation driver.

A round has two phases. Setup: the protocol forms clusters, heads advertise
at full (arena-diagonal) range, everyone pays to receive the adverts, members
pay to send join messages and heads pay to receive them. Steady state: each
member sends one data message to its head, the head receives, aggregates and
forwards a single message to the base station; orphans send their data
straight to the base station.

A message counts at the base station only if its sender is still alive after
paying the full transmission cost. Nodes that die mid-round take no further
part in that round. All per-node processing runs in ascending id order, so a
run is a pure function of (config, protocol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .model import (
    NetworkConfig,
    Node,
    aggregate_energy,
    consume,
    deploy_nodes,
    euclidean_distance,
    rx_energy,
    tx_energy,
)
from .partitioning import FcmParams
from .protocols import (
    ClusterSet,
    EecsParams,
    HeedParams,
    LeachParams,
    eecs_form_clusters,
    form_clusters_nearest,
    fuzzy_form_clusters,
    heed_form_clusters,
    kmeans_form_clusters,
    leach_elect,
    enforce_ch_separation,
)


@dataclass(frozen=True)
class KmeansFormation:
    """Centroid formation with k-means; k=None means 5% of the alive count."""

    k: int | None = None
    max_iter: int = 100


@dataclass(frozen=True)
class FuzzyFormation:
    """Centroid formation with fuzzy c-means; k=None means 5% of the alive count."""

    k: int | None = None
    m: float = 2.0
    tol: float = 1e-4
    max_iter: int = 100


Protocol = Union[LeachParams, HeedParams, EecsParams, KmeansFormation, FuzzyFormation]

PROTOCOL_NAMES: dict[type, str] = {
    LeachParams: "leach",
    HeedParams: "heed",
    EecsParams: "eecs",
    KmeansFormation: "kmeans",
    FuzzyFormation: "fuzzy",
}


def protocol_name(protocol: Protocol) -> str:
    return PROTOCOL_NAMES[type(protocol)]


class SimulationComplete(Exception):
    """Raised when a round is requested but no node is alive."""


@dataclass
class SimState:
    nodes: list[Node]
    config: NetworkConfig
    round: int = 0
    bs_messages: int = 0
    rng: np.random.Generator = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.config.seed)

    def alive_count(self) -> int:
        return sum(1 for n in self.nodes if n.alive)


@dataclass
class RoundReport:
    round: int
    alive_before: int
    alive_after: int
    ch_count: int
    bs_messages_delivered: int
    clustering_iterations: int  # 0 for leach/heed/eecs
    energy_charged: float  # total cost levied this round
    energy_clamped: float  # portion of charges that dying nodes could not pay


@dataclass
class ExperimentResult:
    protocol: str
    config: NetworkConfig
    reports: list[RoundReport]
    first_death_round: int | None
    last_death_round: int | None
    total_bs_messages: int


def time_of(report_round: int, seconds_per_round: float) -> float:
    """Map a round index onto a wall-clock axis."""
    if seconds_per_round <= 0:
        raise ValueError("seconds_per_round must be > 0")
    return report_round * seconds_per_round


def default_cluster_count(alive: int) -> int:
    """The 5%-of-nodes heuristic for centroid formations."""
    return max(1, math.ceil(0.05 * alive))


def _form_clusters(state: SimState, protocol: Protocol) -> tuple[ClusterSet, int]:
    nodes, cfg, rng = state.nodes, state.config, state.rng
    if isinstance(protocol, LeachParams):
        heads = leach_elect(nodes, protocol, state.round, rng)
        if protocol.ch_separation > 0:
            heads = enforce_ch_separation(heads, [n for n in nodes if n.alive],
                                          protocol.ch_separation)
        return form_clusters_nearest(nodes, heads), 0
    if isinstance(protocol, HeedParams):
        cluster_set, _ = heed_form_clusters(nodes, protocol, rng, cfg.initial_energy)
        return cluster_set, 0
    if isinstance(protocol, EecsParams):
        return eecs_form_clusters(nodes, cfg.bs_pos, protocol, rng), 0
    alive = sum(1 for n in nodes if n.alive)
    k = protocol.k if protocol.k is not None else default_cluster_count(alive)
    k = min(k, alive)  # never more clusters than alive nodes as the network dies
    if isinstance(protocol, KmeansFormation):
        return kmeans_form_clusters(nodes, k, max_iter=protocol.max_iter)
    if isinstance(protocol, FuzzyFormation):
        seed = int(rng.integers(0, 2**63))
        params = FcmParams(k=k, m=protocol.m, tol=protocol.tol,
                           max_iter=protocol.max_iter, seed=seed)
        return fuzzy_form_clusters(nodes, params)
    raise TypeError(f"unknown protocol {protocol!r}")


class _Ledger:
    """Charges energy to nodes, tracking totals and the unpayable remainder."""

    def __init__(self):
        self.charged = 0.0
        self.clamped = 0.0

    def charge(self, node: Node, cost: float) -> None:
        self.charged += cost
        shortfall = cost - node.energy
        if shortfall > 0:
            self.clamped += shortfall
        consume(node, cost)


def run_round(state: SimState, protocol: Protocol) -> tuple[SimState, RoundReport]:
    """Advance the simulation by one setup + steady-state cycle."""
    alive_before = state.alive_count()
    if alive_before == 0:
        raise SimulationComplete(f"no alive nodes at round {state.round}")

    cfg = state.config
    radio = cfg.radio
    by_id = {n.id: n for n in state.nodes}
    cluster_set, clustering_iterations = _form_clusters(state, protocol)
    head_ids = set(cluster_set.head_ids)
    ledger = _Ledger()

    # -- setup: head advertisements, heard network-wide
    advert_cost = tx_energy(radio, radio.header_bits, cfg.diagonal)
    delivered_adverts: set[int] = set()
    for head_id in sorted(head_ids):
        head = by_id[head_id]
        ledger.charge(head, advert_cost)
        if head.alive:
            delivered_adverts.add(head_id)
    n_adverts = len(delivered_adverts)
    for node in sorted(state.nodes, key=lambda n: n.id):
        if not node.alive:
            continue
        heard = n_adverts - (1 if node.id in delivered_adverts else 0)
        if heard > 0:
            ledger.charge(node, heard * rx_energy(radio, radio.header_bits))

    # -- setup: join messages back to the chosen head
    for cluster in cluster_set.clusters:
        head = by_id[cluster.head]
        for member_id in sorted(cluster.members):
            member = by_id[member_id]
            if not member.alive:
                continue
            ledger.charge(member, tx_energy(
                radio, radio.header_bits, euclidean_distance(member.pos, head.pos)))
            if member.alive and head.alive:
                ledger.charge(head, rx_energy(radio, radio.header_bits))

    # -- steady state: member data, head aggregation and uplink
    delivered = 0
    for cluster in cluster_set.clusters:
        head = by_id[cluster.head]
        received = 0
        for member_id in sorted(cluster.members):
            member = by_id[member_id]
            if not member.alive:
                continue
            ledger.charge(member, tx_energy(
                radio, radio.data_bits, euclidean_distance(member.pos, head.pos)))
            if member.alive and head.alive:
                ledger.charge(head, rx_energy(radio, radio.data_bits))
                if head.alive:
                    received += 1
        if head.alive:
            ledger.charge(head, aggregate_energy(radio, radio.data_bits, received + 1))
        if head.alive:
            ledger.charge(head, tx_energy(
                radio, radio.data_bits, euclidean_distance(head.pos, cfg.bs_pos)))
            if head.alive:
                delivered += 1

    for orphan_id in sorted(cluster_set.orphans):
        orphan = by_id[orphan_id]
        if not orphan.alive:
            continue
        ledger.charge(orphan, tx_energy(
            radio, radio.data_bits, euclidean_distance(orphan.pos, cfg.bs_pos)))
        if orphan.alive:
            delivered += 1

    for node in state.nodes:
        if node.id in head_ids:
            node.rounds_since_ch = 0
        else:
            node.rounds_since_ch += 1

    state.bs_messages += delivered
    report = RoundReport(
        round=state.round,
        alive_before=alive_before,
        alive_after=state.alive_count(),
        ch_count=len(head_ids),
        bs_messages_delivered=delivered,
        clustering_iterations=clustering_iterations,
        energy_charged=ledger.charged,
        energy_clamped=ledger.clamped,
    )
    state.round += 1
    return state, report


def sweep_iterations(
    base_config: NetworkConfig,
    grid: list[int],
    seeds: list[int],
    fcm_m: float = 2.0,
    fcm_tol: float = 1e-4,
    max_iter: int = 100,
) -> list[tuple[int, float, float]]:
    """Convergence-iteration comparison of the two centroid formations.

    For each seed, nodes are deployed once and both formations run over every
    cluster count in the grid; rows are (k, mean kmeans iterations, mean
    fuzzy iterations) with means taken across seeds.
    """
    per_cell: dict[int, tuple[list[int], list[int]]] = {k: ([], []) for k in grid}
    for seed in seeds:
        config = replace(base_config, seed=seed)
        nodes = deploy_nodes(config)
        for k in grid:
            _, km_iters = kmeans_form_clusters(nodes, k, max_iter=max_iter)
            params = FcmParams(k=k, m=fcm_m, tol=fcm_tol, max_iter=max_iter, seed=seed)
            _, fz_iters = fuzzy_form_clusters(nodes, params)
            per_cell[k][0].append(km_iters)
            per_cell[k][1].append(fz_iters)
    return [
        (k, sum(per_cell[k][0]) / len(seeds), sum(per_cell[k][1]) / len(seeds))
        for k in grid
    ]


def run_simulation(config: NetworkConfig, protocol: Protocol, max_rounds: int) -> ExperimentResult:
    """Deploy, then run rounds until every node is dead or max_rounds is hit."""
    rng = np.random.default_rng(config.seed)
    state = SimState(nodes=deploy_nodes(config, rng), config=config, rng=rng)
    reports: list[RoundReport] = []
    first_death: int | None = None
    last_death: int | None = None
    while state.round < max_rounds and state.alive_count() > 0:
        state, report = run_round(state, protocol)
        reports.append(report)
        if first_death is None and report.alive_after < config.n_nodes:
            first_death = report.round
        if last_death is None and report.alive_after == 0:
            last_death = report.round
    return ExperimentResult(
        protocol=protocol_name(protocol),
        config=config,
        reports=reports,
        first_death_round=first_death,
        last_death_round=last_death,
        total_bs_messages=state.bs_messages,
    )
