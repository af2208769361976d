"""House-price estimation from photos + listing attributes.

Visual features (box-filter blob descriptors from four photos per house) are
fused with textual attributes, min-max normalized, and regressed with either
an epsilon-SVR under the histogram intersection kernel or a small sigmoid
network trained by Levenberg-Marquardt.
"""

__version__ = "0.1.0"

from .data import HouseRecord, SplitSpec, TabularDataset, load_houses_dataset, \
    load_tabular_csv, split
from .errors import ConfigError, CurbpriceError, DataError, DimensionError, FitError, \
    TrainingError, UndefinedMetricError
from .fusion import Normalizer, assemble, denormalize_target, fit_normalizer, normalize
from .imgproc import box_sum, equalize_histogram, integral_image, to_grayscale
from .metrics import EvalReport, evaluate, mse, r_squared, r_value
from .mlp import LmConfig, MlpModel, TrainHistory, forward, init_network, predict_mlp, \
    residual_jacobian, train_lm
from .surf import InterestPoint, SurfParams, assign_orientation, compute_descriptor, \
    detect_and_describe, detect_interest_points, hessian_response_map, strongest_n
from .svr import KernelSpec, SvrConfig, SvrModel, grid_search_svr, hik_kernel, \
    predict_svr, train_svr

__all__ = [
    "__version__",
    "CurbpriceError", "DimensionError", "DataError", "ConfigError", "FitError",
    "TrainingError", "UndefinedMetricError",
    "to_grayscale", "equalize_histogram", "integral_image", "box_sum",
    "SurfParams", "InterestPoint", "hessian_response_map", "detect_interest_points",
    "assign_orientation", "compute_descriptor", "detect_and_describe", "strongest_n",
    "HouseRecord", "TabularDataset", "SplitSpec", "load_houses_dataset",
    "load_tabular_csv", "split",
    "Normalizer", "assemble", "fit_normalizer", "normalize", "denormalize_target",
    "KernelSpec", "SvrConfig", "SvrModel", "hik_kernel", "train_svr", "predict_svr",
    "grid_search_svr",
    "MlpModel", "LmConfig", "TrainHistory", "init_network", "forward",
    "residual_jacobian", "train_lm", "predict_mlp",
    "EvalReport", "mse", "r_squared", "r_value", "evaluate",
]
