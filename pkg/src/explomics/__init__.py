"""Exploratory analysis of large-p small-N data matrices.

Synchronized dual-SVD biplots, randomization-calibrated projection content,
graph-geodesic multidimensional scaling and FDR-controlled multiple testing,
orchestrated as replayable exploration sessions behind a CLI and an HTTP
gateway.
"""

from .dataset import (
    AnnotationTable,
    Dataset,
    Factor,
    impute_knn,
    parse_annotations,
    parse_matrix,
    serialize_matrix,
)
from .errors import (
    DegenerateInputError,
    DisconnectedGraphError,
    ExplomicsError,
    ParseError,
    ValidationError,
)
from .mds import (
    IsomapResult,
    NeighborGraph,
    covariance_to_distance,
    distance_from_points,
    distance_to_covariance,
    geodesic_distances,
    gram_from_points,
    isomap_embed,
    knn_graph,
    project_to_valid_covariance,
    reconstruct_points,
)
from .nullmodels import (
    NullSpec,
    expected_projection_content,
    gaussian_dataset,
    largest_covariance_eigenvalue,
    largest_eigenvalue_edge,
    signal_noise_ratio,
)
from .preprocess import (
    center_samples,
    group_mean_center,
    standardize_variables,
    variance_filter,
)
from .session import (
    Session,
    Step,
    apply,
    export_json,
    export_session,
    import_session,
    new_session,
    remove_signal,
    replay,
    undo,
)
from .stats import (
    ConfusionCounts,
    DiscoveryRates,
    TestTable,
    bh_reject,
    discovery_rates,
    multi_t_test,
    permutation_null,
    q_values,
    two_sample_t,
)
from .svd import (
    BiplotCoords,
    DualSvdSystem,
    approx_entries,
    approximation_error,
    biplot_coordinates,
    compute_dual_svd,
    lambda_inner_product,
    projection_content,
    reconstruct,
)

__version__ = "0.1.0"
