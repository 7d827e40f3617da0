"""Multi-view machines: a supervised predictor that models every interaction
order between feature views through one jointly factorized weight tensor,
with linear-time sparse prediction and SGD training.

The hot per-instance kernels live in a compiled extension with a pure-Python
fallback; `mvm.BACKEND` names the one in use.
"""

from .baselines import (
    LinearModel,
    MvfmModel,
    baseline_objective,
    baseline_train,
    linear_predict,
    linear_predict_dataset,
    mvfm_gradient,
    mvfm_predict,
    mvfm_predict_dataset,
)
from .data import (
    Dataset,
    deserialize_model,
    load_dataset,
    load_model,
    parse_dataset,
    save_dataset,
    save_model,
    serialize_model,
    split,
    synth_generate,
    write_dataset,
)
from .errors import (
    DataFormatError,
    DivergenceError,
    MetricError,
    ModelFormatError,
    MvmError,
    OracleScaleError,
    SchemaError,
)
from .kernels import BACKEND
from .metrics import EvalReport, accuracy, auc, mean_logloss, rmse
from .model import (
    MultiViewInstance,
    MvmModel,
    SparseViewVector,
    ViewSchema,
    augment_dimension,
    global_bias,
    in_use_parameters,
    interaction_weight,
    model_gradient,
    predict_dataset,
    predict_fast,
    predict_naive,
    view_factor_sums,
)
from .objectives import (
    LOSSES,
    REGS,
    loss_derivative,
    loss_value,
    loss_values,
    reg_gradient,
    reg_gradients,
    reg_value,
)
from .training import (
    TrainConfig,
    TrainReport,
    grad_check,
    init_model,
    instance_update,
    objective,
    select_lambda,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "DataFormatError",
    "DivergenceError",
    "EvalReport",
    "LinearModel",
    "LOSSES",
    "MetricError",
    "ModelFormatError",
    "MultiViewInstance",
    "MvfmModel",
    "MvmError",
    "MvmModel",
    "OracleScaleError",
    "REGS",
    "SchemaError",
    "SparseViewVector",
    "TrainConfig",
    "TrainReport",
    "ViewSchema",
    "accuracy",
    "auc",
    "augment_dimension",
    "baseline_objective",
    "baseline_train",
    "deserialize_model",
    "global_bias",
    "grad_check",
    "in_use_parameters",
    "init_model",
    "instance_update",
    "interaction_weight",
    "linear_predict",
    "linear_predict_dataset",
    "load_dataset",
    "load_model",
    "loss_derivative",
    "loss_value",
    "loss_values",
    "mean_logloss",
    "model_gradient",
    "mvfm_gradient",
    "mvfm_predict",
    "mvfm_predict_dataset",
    "objective",
    "parse_dataset",
    "predict_dataset",
    "predict_fast",
    "predict_naive",
    "reg_gradient",
    "reg_gradients",
    "reg_value",
    "rmse",
    "save_dataset",
    "save_model",
    "select_lambda",
    "serialize_model",
    "split",
    "synth_generate",
    "train",
    "view_factor_sums",
    "write_dataset",
]
