from .gradcheck import grad_check
from .layers import (
    AttentionBlock,
    Dense,
    Embedding,
    LayerNorm,
    Parameter,
    ParamStore,
    init_dense,
    init_embedding,
)
from .optim import OptimizerConfig, adam_step, lr_at
from .tensor import (
    NumericError,
    ShapeError,
    Tensor,
    add,
    affine,
    backward,
    concat,
    constant,
    cross_entropy_loss,
    embedding_lookup,
    film,
    gelu,
    layer_norm,
    matmul,
    mse_loss,
    mul,
    relu,
    reshape,
    scale,
    sinusoidal_encoding,
    slice2d,
    softmax,
    transpose,
)

__all__ = [
    "AttentionBlock",
    "Dense",
    "Embedding",
    "LayerNorm",
    "NumericError",
    "OptimizerConfig",
    "Parameter",
    "ParamStore",
    "ShapeError",
    "Tensor",
    "add",
    "adam_step",
    "affine",
    "backward",
    "concat",
    "constant",
    "cross_entropy_loss",
    "embedding_lookup",
    "film",
    "gelu",
    "grad_check",
    "init_dense",
    "init_embedding",
    "layer_norm",
    "lr_at",
    "matmul",
    "mse_loss",
    "mul",
    "relu",
    "reshape",
    "scale",
    "sinusoidal_encoding",
    "slice2d",
    "softmax",
    "transpose",
]
