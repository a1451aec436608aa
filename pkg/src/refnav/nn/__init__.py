"""Hand-rolled numerical kernel: autodiff ops, LSTM/MLP layers, parameter
store, and a finite-difference gradient checker."""

from .autodiff import Var, constant
from .gradcheck import grad_check
from .layers import (
    BiLstmParams,
    LinearParams,
    LstmParams,
    MlpParams,
    bilstm_encode,
    linear,
    lstm_run,
    lstm_step,
    mlp2,
    positional_encoding,
    softmax_np,
)
from .params import ParamStore, glorot_uniform

__all__ = [
    "BiLstmParams", "LinearParams", "LstmParams", "MlpParams", "ParamStore",
    "Var", "bilstm_encode", "constant", "glorot_uniform", "grad_check",
    "linear", "lstm_run", "lstm_step", "mlp2", "positional_encoding",
    "softmax_np",
]
