"""Self-supervised linear dimensionality reduction on Gaussian mixtures.

Generative models with shared covariance, contrastive / non-contrastive /
two-modality objectives over linear maps, reference-subspace diagnostics, a
projected-gradient trainer, clustering metrics, and a reproducible synthetic
benchmark harness.
"""

from .models import (SharedGMM, PairedGMM, ClipGMM, LabeledSample, PairSample,
                     ClipSample, sample_gmm, sample_pairs, sample_clip,
                     posterior, project_gmm, model_from_json)
from .subspaces import (Subspace, SubspaceReport, fisher_subspace,
                        fisher_directions, svd_subspace, empirical_svd_subspace,
                        fisher_discriminant, principal_angles,
                        containment_report, orthonormal_columns,
                        lda_direction, fisher_lda_direction,
                        ANGLE_TOL_TRAINED, ANGLE_TOL_ANALYTIC)
from .losses import (Batch, ClipBatch, SiamConfig, infonce_loss, infonce_grad,
                     infonce_loss_and_grad, simsiam_loss, simsiam_grad,
                     simsiam_loss_and_grad, simsiam_population_loss,
                     simsiam_population_grad, clip_loss, clip_grads,
                     clip_loss_and_grads, spectral_objective, convexity_probe)
from .training import (TrainConfig, TrainTrace, TrainingAbort, train,
                       spectral_clip, init_projection)
from .clustering import Clustering, kmeans, ari, ami, evaluate_projection
from .harness import (ScenarioConfig, ResultRow, MethodResult, METHODS,
                      CSV_HEADER, make_benchmark_model, make_scaling_model,
                      make_clip_model, make_pancake_model, simsiam_xi_bound,
                      run_method, run_clip_method, run_sweep)
from .rng import substream, substream_seed

__version__ = "0.1.0"
