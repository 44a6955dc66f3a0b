"""
Diffmath - Tensores densos float64 con diferenciación automática en modo reverso
"""
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckResult, check_gradients
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    concat,
    conv2d,
    conv3d,
    gather,
    grad_enabled,
    l2_normalize,
    layer_norm,
    matmul,
    max_pool_2d,
    max_pool_global,
    max_reduce,
    mean,
    mul,
    no_grad,
    record_branches,
    relu,
    reshape,
    scale,
    softmax_cross_entropy,
    sub,
    transpose,
)
from .tensor import sum as sum_all

__all__ = [
    # Núcleo
    'Tensor',
    'Tape',
    'backward',
    'no_grad',
    'grad_enabled',
    'record_branches',

    # Operaciones
    'add',
    'sub',
    'mul',
    'scale',
    'sum_all',
    'transpose',
    'mean',
    'reshape',
    'relu',
    'matmul',
    'concat',
    'gather',
    'max_reduce',
    'max_pool_global',
    'max_pool_2d',
    'layer_norm',
    'l2_normalize',
    'softmax_cross_entropy',
    'conv2d',
    'conv3d',

    # Checkpoints
    'save_checkpoint',
    'load_checkpoint',
    'encode_checkpoint',
    'decode_checkpoint',

    # Verificación
    'check_gradients',
    'GradCheckResult',
]
