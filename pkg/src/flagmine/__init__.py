"""Mining fuzzy lagged co-clusters from real matrices."""
from .errors import *  # noqa: F401,F403
from .matrix import (
    ADDITIVE,
    MULTIPLICATIVE,
    DataMatrix,
    FuzzyLaggedCluster,
    Verification,
    aligned_submatrix,
    log_transform,
    objective_score,
    plain_cocluster_error,
    read_matrix_csv,
    verify_cluster,
    write_matrix_csv,
)
from .profiles import ProfilePair, brute_force_error, fit_profiles, two_row_error
from .miner import (
    MinerConfig,
    SeedChoice,
    column_addition,
    default_disc_set_size,
    default_iterations,
    expected_hit_rate,
    mine,
    row_addition,
)
from .synth import (
    GroundTruth,
    PlantSpec,
    Trajectories,
    artifact_frequency,
    artifact_probability,
    has_profile_artifact,
    gen_random_matrix,
    gen_trajectories,
    gen_trajectory_groups,
    plant_cluster,
)
from .postprocess import Bridge, bridges, bridges_intersect, max_nonintersecting_columns, merge_clusters
from .evaluation import (
    DbscanConfig,
    EvalReport,
    cell_set,
    clustering_f1,
    coverage,
    dbscan,
    f1_score,
    normalized_entropy,
    recovers_planted,
    rnia_complement,
)

__version__ = "0.1.0"
