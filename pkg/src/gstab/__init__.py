"""gstab: geometric stability analysis for representation matrices.

Measures how reliably a representation's pairwise-distance geometry holds up
under internal resampling (feature halves, sample halves, trial halves),
alongside the cross-representation similarity metrics it is dissociated from,
plus drift detection, steering evaluation, and resampling inference.
"""

from .errors import GstabError
from .inference import (
    BootstrapResult,
    DriftSeries,
    PermutationNull,
    bootstrap_ci,
    detection_threshold,
    early_warning_compare,
    false_alarm_rate,
    partial_spearman,
    permutation_null_centroid,
    roc_auc,
    sensitivity_at_fpr,
)
from .drift import DRIFT_METRICS, build_drift_series, drift_score
from .numerics import (
    Rdm,
    average_ranks,
    center_columns,
    compute_rdm,
    l2_normalize_rows,
    pca,
    pearson,
    random_orthogonal,
    spearman,
    zca_whiten,
    zscore_columns,
)
from .rng import RandomStream, replicate_seed
from .similarity import (
    SimilarityValue,
    debiased_cka,
    effective_rank,
    eigenspectrum_similarity,
    linear_cka,
    mmd_rbf,
    participation_ratio,
    procrustes_similarity,
    pwcka_effective_rank,
    rdm_pearson,
    rsa_spearman,
    sliced_wasserstein,
    subspace_overlap,
)
from .stability import (
    StabilityConfig,
    StabilityScore,
    anisotropy,
    centroid_drift,
    class_separation_ratio,
    feature_split_stability,
    fisher_discriminant,
    label_conditioned_stability,
    latent_perturbation_stability,
    lda_direction,
    lda_direction_stability,
    perturbation_coherence,
    sample_split_stability,
    silhouette_score,
    supervised_rdm_alignment,
    trial_split_stability,
    variance_ratio,
    whitened_trial_split,
    zscore_variance_ratio,
)
from .steering import (
    LinearProbe,
    SteeringResult,
    random_direction_drops,
    shuffled_label_control,
    steering_direction,
    steering_sweep,
    train_linear_probe,
)
from .synthetic import (
    EncoderTransform,
    MixedSpec,
    QuadrantPair,
    SEED_LIST,
    apply_encoder,
    gen_class_gaussians,
    gen_mixed,
    gen_power_law,
    gen_quadrants,
    spectral_delete,
)

__version__ = "0.1.0"
