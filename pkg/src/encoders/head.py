"""
Pooling global y cabeza de proyección (MLP de 3 capas + normalización L2)
"""
import numpy as np

from .. import diffmath as dm
from ..config import EncoderConfig
from ..errors import EmptyInputError
from .params import EncoderParams, FeatureSet, GlobalFeature, init_bias, init_weight


def init_head(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    params = EncoderParams(
        "head",
        hyper={"in_dim": cfg.feature_dim, "hidden": cfg.head_hidden, "out_dim": cfg.head_out},
    )
    params.add("fc1.w", init_weight(rng, (cfg.feature_dim, cfg.head_hidden)))
    params.add("fc1.b", init_bias(cfg.head_hidden))
    params.add("fc2.w", init_weight(rng, (cfg.head_hidden, cfg.head_hidden)))
    params.add("fc2.b", init_bias(cfg.head_hidden))
    params.add("fc3.w", init_weight(rng, (cfg.head_hidden, cfg.head_out)))
    params.add("fc3.b", init_bias(cfg.head_out))
    return params


def pool_project(fs: FeatureSet, head: EncoderParams) -> GlobalFeature:
    """
    Max-pooling global por columna, MLP y normalización L2

    Args:
        fs: Features por elemento
        head: Parámetros de la cabeza

    Returns:
        GlobalFeature de norma 1

    Raises:
        EmptyInputError: Si el FeatureSet está vacío
    """
    if len(fs) == 0:
        raise EmptyInputError("pool_project sobre un FeatureSet vacío")
    x = dm.reshape(dm.max_pool_global(fs.features), (1, fs.dim))
    x = dm.relu(dm.add(dm.matmul(x, head["fc1.w"]), head["fc1.b"]))
    x = dm.relu(dm.add(dm.matmul(x, head["fc2.w"]), head["fc2.b"]))
    x = dm.add(dm.matmul(x, head["fc3.w"]), head["fc3.b"])
    return GlobalFeature(dm.reshape(dm.l2_normalize(x, axis=-1), (head.hyper["out_dim"],)))
