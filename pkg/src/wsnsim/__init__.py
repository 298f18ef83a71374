"""Round-based lifetime simulator for clustered wireless sensor networks."""

from .engine import (
    EecsParams,
    ExperimentResult,
    FuzzyFormation,
    HeedParams,
    KmeansFormation,
    LeachParams,
    Protocol,
    RoundReport,
    SimState,
    SimulationComplete,
    protocol_name,
    run_round,
    run_simulation,
    sweep_iterations,
    time_of,
)
from .model import (
    NetworkConfig,
    Node,
    Position,
    RadioModel,
    aggregate_energy,
    consume,
    deploy_nodes,
    euclidean_distance,
    rx_energy,
    tx_energy,
)
from .partitioning import (
    FcmParams,
    HardPartition,
    MembershipMatrix,
    defuzzify,
    fcm_centroids,
    fcm_init,
    fcm_memberships,
    fcm_run,
    kmeans_assign,
    kmeans_init,
    kmeans_run,
    kmeans_update,
)
from .protocols import (
    Cluster,
    ClusterSet,
    eecs_form_clusters,
    enforce_ch_separation,
    form_clusters_nearest,
    fuzzy_form_clusters,
    heed_cost,
    heed_form_clusters,
    kmeans_form_clusters,
    leach_elect,
    leach_eligible,
    leach_threshold,
)

__version__ = "0.1.0"
