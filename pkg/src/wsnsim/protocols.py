"""Cluster formation strategies.

Each strategy maps the current alive-node set (plus its parameters and the
round's randomness) to a ClusterSet: who heads a cluster, who belongs to it,
and who is left to transmit straight to the base station. Five strategies are
implemented:

* probabilistic rotation election with nearest-head clustering (LEACH style)
* iterative residual-energy election with cost-based attachment (HEED style)
* candidate suppression with sink-distance-aware cluster sizing (EECS style)
* k-means over node positions, heads picked per cluster by residual energy
* fuzzy c-means over node positions, heads picked the same way

Everything is deterministic given the node set, the parameters and the
generator state; ties always resolve to the lowest id or index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Node, Position, euclidean_distance
from .partitioning import (
    FcmParams,
    defuzzify,
    fcm_run,
    kmeans_run,
    positions_array,
)


@dataclass
class Cluster:
    head: int
    members: list[int] = field(default_factory=list)


@dataclass
class ClusterSet:
    """One round's partition of the alive nodes."""

    clusters: list[Cluster] = field(default_factory=list)
    orphans: list[int] = field(default_factory=list)  # transmit directly to the BS

    @property
    def head_ids(self) -> list[int]:
        return [c.head for c in self.clusters]

    def validate(self, alive_ids: set[int]) -> None:
        """Check the exactly-once partition invariant over the alive nodes."""
        seen: list[int] = []
        for c in self.clusters:
            if c.head in c.members:
                raise ValueError(f"head {c.head} listed among its own members")
            seen.append(c.head)
            seen.extend(c.members)
        seen.extend(self.orphans)
        if len(seen) != len(set(seen)):
            raise ValueError("a node appears more than once in the cluster set")
        if set(seen) != alive_ids:
            raise ValueError("cluster set does not cover the alive nodes exactly")


@dataclass(frozen=True)
class LeachParams:
    p: float = 0.05  # desired cluster-head fraction
    ch_separation: float = 0.0  # optional minimum head spacing, 0 disables

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("p must be in (0, 1]")


@dataclass(frozen=True)
class HeedParams:
    c_prob: float = 0.05  # initial probability scale
    p_min: float = 1e-4  # probability floor
    cluster_radius: float = 20.0  # neighborhood radius, meters
    announce_waves: int = 2  # announcement passes before candidates settle
    max_iterations: int | None = None  # None = ceil(log2(1/p_min)) + 1
    ch_separation: float = 0.0

    def __post_init__(self):
        if not 0 < self.p_min <= self.c_prob <= 1:
            raise ValueError("require 0 < p_min <= c_prob <= 1")
        if self.cluster_radius <= 0:
            raise ValueError("cluster_radius must be > 0")
        if self.announce_waves < 1:
            raise ValueError("announce_waves must be >= 1")

    @property
    def iteration_bound(self) -> int:
        """Hard cap on election iterations, ceil(log2(1/p_min)) + 1 at most."""
        bound = math.ceil(math.log2(1.0 / self.p_min)) + 1
        return bound if self.max_iterations is None else min(self.max_iterations, bound)


@dataclass(frozen=True)
class EecsParams:
    p: float = 0.5  # candidate fraction (suppression thins the surplus)
    w: float = 0.5  # member-distance weight vs head-to-BS distance
    suppress_radius: float = 30.0  # earshot within which weaker candidates yield
    join_radius: float = 50.0  # heads a plain node weighs against each other
    head_fraction: float = 0.06  # target head count as a share of alive nodes
    ch_separation: float = 0.0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("p must be in (0, 1]")
        if not 0 <= self.w <= 1:
            raise ValueError("w must be in [0, 1]")
        if self.suppress_radius < 0 or self.join_radius <= 0:
            raise ValueError("radii must be positive")
        if not 0 < self.head_fraction <= 1:
            raise ValueError("head_fraction must be in (0, 1]")


def _alive(nodes: list[Node]) -> list[Node]:
    return [n for n in nodes if n.alive]


# --- rotation election (LEACH) -------------------------------------------------


def rotation_period(p: float) -> int:
    return math.ceil(1.0 / p)


def leach_threshold(p: float, r: int, eligible: bool) -> float:
    """Election threshold p / (1 - p * (r mod ceil(1/p))), clamped to [0, 1].

    Ineligible nodes get 0. The clamp makes the end-of-period value exactly
    1.0, where every still-eligible node must elect itself.
    """
    if not eligible:
        return 0.0
    rm = r % rotation_period(p)
    denom = 1.0 - p * rm
    if denom <= 0.0:
        return 1.0
    return min(1.0, p / denom)


def leach_eligible(node: Node, p: float, r: int) -> bool:
    """In the election set iff the node has not served since the current
    rotation period began.

    Periods are aligned to multiples of ceil(1/p): when ``r mod ceil(1/p)``
    wraps to 0 every node becomes eligible again, which is what keeps the
    threshold formula's expected head count constant over the period.
    """
    return node.rounds_since_ch >= r % rotation_period(p)


def leach_elect(nodes: list[Node], params: LeachParams, r: int, rng) -> set[int]:
    """Per-node threshold election; guarantees at least one head via fallback.

    Every alive node draws once (in id order) so the random stream does not
    depend on eligibility. If nobody self-elects, the alive node with the
    most energy (ties: lowest id) stands in as head for the round.
    """
    alive = _alive(nodes)
    if not alive:
        raise ValueError("no alive nodes")
    heads: set[int] = set()
    for node in sorted(alive, key=lambda n: n.id):
        draw = float(rng.random())
        t = leach_threshold(params.p, r, leach_eligible(node, params.p, r))
        if draw < t:
            heads.add(node.id)
    if not heads:
        fallback = min(alive, key=lambda n: (-n.energy, n.id))
        heads.add(fallback.id)
    return heads


def form_clusters_nearest(nodes: list[Node], ch_ids: set[int]) -> ClusterSet:
    """Attach every non-head alive node to its nearest head (ties: lowest head id)."""
    if not ch_ids:
        raise ValueError("ch_ids must not be empty")
    alive = _alive(nodes)
    by_id = {n.id: n for n in alive}
    heads = sorted(ch_ids)
    for h in heads:
        if h not in by_id:
            raise ValueError(f"cluster head {h} is not an alive node")
    clusters = {h: Cluster(head=h) for h in heads}
    for node in alive:
        if node.id in ch_ids:
            continue
        best = min(heads, key=lambda h: (euclidean_distance(node.pos, by_id[h].pos), h))
        clusters[best].members.append(node.id)
    return ClusterSet(clusters=[clusters[h] for h in heads])


def enforce_ch_separation(ch_ids: set[int], nodes: list[Node], min_dist: float) -> set[int]:
    """Greedy thinning: keep heads in descending-energy order, drop any within
    min_dist of an already kept head. Always keeps at least one."""
    if not ch_ids:
        raise ValueError("ch_ids must not be empty")
    by_id = {n.id: n for n in nodes}
    order = sorted(ch_ids, key=lambda i: (-by_id[i].energy, i))
    kept: list[int] = []
    for cand in order:
        if all(euclidean_distance(by_id[cand].pos, by_id[k].pos) >= min_dist for k in kept):
            kept.append(cand)
    return set(kept)


# --- iterative residual-energy election (HEED) ---------------------------------


def heed_announce_prob(params: HeedParams, energy, reference: float):
    """Per-wave announcement probability from residual energy.

    Energy is taken relative to the best-charged alive node and squared,
    which concentrates head duty on well-charged nodes; the p_min floor
    keeps every node electable and caps the doubling loop's length.
    """
    if reference <= 0:
        raise ValueError("reference energy must be > 0")
    ratio = np.asarray(energy, dtype=float) / reference
    return np.clip(np.maximum(params.c_prob * ratio**2, params.p_min), None, 1.0)


def heed_cost(node: Node, candidate: Node, nodes: list[Node], radius: float) -> float:
    """Communication cost of attaching to ``candidate``: mean squared distance
    from the candidate to its alive neighbors within ``radius``.

    A candidate without neighbors gets the worst in-range cost, radius^2.
    Lower is better; callers break ties on the lower candidate id.
    """
    sq = [
        euclidean_distance(candidate.pos, other.pos) ** 2
        for other in nodes
        if other.alive and other.id != candidate.id
        and euclidean_distance(candidate.pos, other.pos) <= radius
    ]
    return sum(sq) / len(sq) if sq else radius * radius


def heed_form_clusters(
    nodes: list[Node],
    params: HeedParams,
    rng,
    initial_energy: float,
) -> tuple[ClusterSet, int]:
    """Iterative election: a node with no candidate in earshot announces with
    a residual-energy probability that doubles each pass; an announced
    candidate settles as final head iff no cheaper candidate is in its
    earshot. Plain nodes join the lowest-cost final head within the cluster
    radius, and nodes left uncovered attach to the nearest final head.

    Returns the cluster set and the number of iterations the election took,
    which never exceeds ceil(log2(1/p_min)) + 1.
    """
    alive = sorted(_alive(nodes), key=lambda n: n.id)
    if not alive:
        raise ValueError("no alive nodes")
    n = len(alive)
    pos = positions_array(alive)
    ids = np.array([a.id for a in alive])
    energy = np.array([a.energy for a in alive])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    in_range = dist <= params.cluster_radius
    np.fill_diagonal(in_range, False)

    # per-candidate attachment cost: mean squared neighbor distance, radius^2
    # when isolated (matches heed_cost on the same inputs)
    sq = dist * dist
    neighbor_counts = in_range.sum(axis=1)
    cost = np.where(
        neighbor_counts > 0,
        (sq * in_range).sum(axis=1) / np.maximum(neighbor_counts, 1),
        params.cluster_radius**2,
    )

    prob = heed_announce_prob(params, energy, float(energy.max()))

    announced = np.zeros(n, dtype=bool)
    # rank encodes the (cost, id) order so a plain argmin resolves ties by id
    rank = np.empty(n, dtype=int)
    rank[np.lexsort((ids, cost))] = np.arange(n)
    bound = params.iteration_bound
    waves = min(params.announce_waves, bound)
    iterations = 0
    while iterations < waves:
        iterations += 1
        # only nodes with no candidate in earshot roll an announcement;
        # everyone else defers, which is what thins the candidate set
        covered = announced | (in_range & announced[None, :]).any(axis=1)
        if covered.all():
            break
        draws = rng.random(n)
        announced |= ~covered & ((prob >= 1.0) | (draws < prob))
        prob = np.minimum(prob * 2.0, 1.0)
    if not announced.any():
        announced[int(np.lexsort((ids, -energy))[0])] = True  # richest stands in

    heard = in_range & announced[None, :]
    heard |= np.diag(announced)
    final = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(announced):
        keys = np.where(heard[i], rank, n)
        if int(keys.argmin()) == i:
            final[i] = True

    head_idx = np.flatnonzero(final)
    heads = {int(ids[i]) for i in head_idx}
    if params.ch_separation > 0:
        heads = enforce_ch_separation(heads, alive, params.ch_separation)
        head_idx = np.flatnonzero(np.isin(ids, sorted(heads)))

    clusters = {int(ids[i]): Cluster(head=int(ids[i])) for i in head_idx}
    for i in range(n):
        if int(ids[i]) in heads:
            continue
        choices = [j for j in head_idx if in_range[i, j]]
        if choices:
            best = min(choices, key=lambda j: (cost[j], ids[j]))
        else:
            best = min(head_idx, key=lambda j: (dist[i, j], ids[j]))
        clusters[int(ids[best])].members.append(int(ids[i]))
    ordered = [clusters[h] for h in sorted(clusters)]
    return ClusterSet(clusters=ordered), iterations


# --- candidate suppression with sink-aware sizing (EECS) ------------------------


def eecs_head_quota(alive_count: int, head_fraction: float = 0.05) -> int:
    """Target head count: the 5%-of-nodes heuristic, at least one."""
    return max(1, math.ceil(head_fraction * alive_count))


def eecs_form_clusters(nodes: list[Node], bs: Position, params: EecsParams, rng) -> ClusterSet:
    """Probability-p candidacy, energy-ranked suppression, cost-based joins.

    Candidates are scanned from highest residual energy down (ties: lower
    id); each survivor suppresses every weaker candidate in its earshot, and
    the scan stops at the head_fraction-of-alive quota. This keeps head duty
    with the locally best-charged nodes while holding the head count at the
    level that balances member uplinks against per-head base-station traffic.

    Plain nodes then weigh their distance to a head against that head's
    distance to the base station, so heads far from the sink attract fewer
    members and spend less on receiving and aggregation to offset their
    longer uplink.
    """
    alive = sorted(_alive(nodes), key=lambda n: n.id)
    if not alive:
        raise ValueError("no alive nodes")

    draws = {n.id: float(rng.random()) for n in alive}
    candidates = [n for n in alive if draws[n.id] < params.p]
    if not candidates:
        candidates = [min(alive, key=lambda n: (-n.energy, n.id))]

    quota = eecs_head_quota(len(alive), params.head_fraction)
    kept: list[Node] = []
    for cand in sorted(candidates, key=lambda n: (-n.energy, n.id)):
        if len(kept) >= quota:
            break
        if all(
            euclidean_distance(cand.pos, other.pos) > params.suppress_radius
            for other in kept
        ):
            kept.append(cand)
    heads = {n.id for n in kept}
    if params.ch_separation > 0:
        heads = enforce_ch_separation(heads, alive, params.ch_separation)
        kept = [n for n in kept if n.id in heads]

    bs_dist = {n.id: euclidean_distance(n.pos, bs) for n in kept}
    d_bs_min = min(bs_dist.values())
    d_bs_max = max(bs_dist.values())
    bs_span = d_bs_max - d_bs_min

    clusters = {h: Cluster(head=h) for h in sorted(heads)}
    for node in alive:
        if node.id in heads:
            continue
        dists = {h.id: euclidean_distance(node.pos, h.pos) for h in kept}
        # heads compete for the node only within its join radius; a node with
        # no head that close simply attaches to the nearest one
        reachable = [h for h in kept if dists[h.id] <= params.join_radius]
        if not reachable:
            best = min(kept, key=lambda h: (dists[h.id], h.id))
        else:
            d_max = max(dists[h.id] for h in reachable)

            def cost(h: Node) -> float:
                member_term = dists[h.id] / d_max if d_max > 0 else 0.0
                bs_term = (bs_dist[h.id] - d_bs_min) / bs_span if bs_span > 0 else 0.0
                return params.w * member_term + (1.0 - params.w) * bs_term

            best = min(reachable, key=lambda h: (cost(h), h.id))
        clusters[best.id].members.append(node.id)
    return ClusterSet(clusters=[clusters[h] for h in sorted(clusters)])


# --- centroid-based formation (k-means / fuzzy c-means) -------------------------


def _head_by_energy(members: list[Node], centroid: Position) -> int:
    """Max residual energy; ties by distance to the centroid, then lowest id."""
    return min(
        members,
        key=lambda n: (-n.energy, euclidean_distance(n.pos, centroid), n.id),
    ).id


def _centroid_cluster_set(
    alive: list[Node], assignment: np.ndarray, centroids: list[Position], k: int
) -> ClusterSet:
    clusters: list[Cluster] = []
    for j in range(k):
        group = [alive[i] for i in range(len(alive)) if assignment[i] == j]
        if not group:
            continue
        head = _head_by_energy(group, centroids[j])
        clusters.append(Cluster(head=head, members=[n.id for n in group if n.id != head]))
    return ClusterSet(clusters=clusters)


def kmeans_form_clusters(nodes: list[Node], k: int, max_iter: int = 100) -> tuple[ClusterSet, int]:
    """Cluster alive nodes by position with k-means; head each cluster by energy."""
    alive = sorted(_alive(nodes), key=lambda n: n.id)
    if k > len(alive):
        raise ValueError(f"k={k} exceeds alive node count {len(alive)}")
    part = kmeans_run(alive, k, max_iter=max_iter)
    return _centroid_cluster_set(alive, part.assignment, part.centroids, k), part.iterations


def fuzzy_form_clusters(nodes: list[Node], fcm: FcmParams) -> tuple[ClusterSet, int]:
    """Cluster alive nodes with fuzzy c-means, defuzzify, head each cluster by energy."""
    alive = sorted(_alive(nodes), key=lambda n: n.id)
    if fcm.k > len(alive):
        raise ValueError(f"k={fcm.k} exceeds alive node count {len(alive)}")
    u, centroids, iterations = fcm_run([n.pos for n in alive], fcm)
    assignment = defuzzify(u)
    return _centroid_cluster_set(alive, assignment, centroids, fcm.k), iterations
