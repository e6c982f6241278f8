"""Sample selection for crowded pedestrian detection.

Constraint-guided Hungarian label assignment, the utilizability-aware focal
loss and the log-average miss-rate evaluation protocol, plus a synthetic
crowded-scene generator to exercise them.
"""
from ._core import BACKEND
from .assignment import Assignment, brute_force_assign, cgla_assign, hungarian_solve, legacy_assign
from .costs import CostConfig, CostMatrix, PairCosts, build_cost_matrix, build_legacy_cost_matrix
from .evaluation import EvalResult, evaluate, log_average_mr, match_detections
from .geometry import BBox, Sample, center_l1, giou, iou
from .loss import GradientRatioTracker, LossConfig, LossReport, batch_uafl, focal_loss, uafl_gamma, uafl_grad, uafl_loss
from .scenes import Scene, load_scenes, make_scenes
from .synthgen import SceneSpec, gen_predictions, gen_scene

__version__ = "0.1.0"
