"""Global visual salience of competing stimuli, fixation-map analytics
and pRF-based image identification."""

from .pairwise import (DesignRow, FitConfig, GlobalSalienceModel, Outcome,
                       Side, Trial, encode_trial, fit, predict_prob,
                       rank_images)
from .evaluation import (BootstrapResult, FoldPlan, MetricReport, accuracy,
                         auc, cv_select_C, evaluate_folds,
                         make_leave2out_plan, percentile_bootstrap, tjur_r2)
from .fixmaps import (Fixation, MassSplit, Rect, SalienceGrid, delta_series,
                      filter_fixations, fixation_density, kld, salience_mass)
from .prf import (FeatureMap, PRFVoxel, confidence, correlation_matrix,
                  filter_voxels, identify, kendall_tau, predict_profile,
                  prf_weight, rdm, rms_contrast_map, rsa_kendall)

__version__ = "0.1.0"
