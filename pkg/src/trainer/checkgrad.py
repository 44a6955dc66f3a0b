"""
Suite de verificación de gradientes: operaciones de diffmath, encoders y pérdidas
"""
import time
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger

from .. import diffmath as dm
from ..augment import AugmentParams, CropSpec, make_image_view, make_view
from ..config import ContrastConfig, EncoderConfig, StrategyConfig, TrainConfig
from ..contrast import MemoryBank, PairSet, global_infonce, local_infonce
from ..diffmath import GradCheckResult, Tensor, check_gradients
from ..encoders import encode, init_encoder, init_head, pool_project
from ..errors import DegenerateBatchError
from ..geometry import CameraIntrinsics, ColorImage, DepthMap, ViewFormat
from ..strategies import SkippedFrame, build_strategy, frame_loss, prepare_views
from ..synthdata import PosedFrame

Caso = Callable[[np.random.Generator], Tuple[Callable[[], Tensor], List[Tensor]]]

# Encoders mínimos: la suite entera corre en segundos
TINY_ENCODER = EncoderConfig(
    widths=(2, 3, 4),
    feature_dim=4,
    head_hidden=4,
    head_out=4,
    depth_input_size=16,
    max_points=256,
    point_k1=8,
    point_k2=4,
    voxel_size=0.3,
    voxel_grid_limit=32,
)


def _param(rng: np.random.Generator, *forma) -> Tensor:
    return Tensor(rng.normal(size=forma), requires_grad=True)


def _proyectar(t: Tensor, rng: np.random.Generator) -> Tensor:
    """Escalar sum(t * W) con W aleatorio fijo (gradiente no trivial en cada entrada)"""
    return dm.sum_all(dm.mul(t, Tensor(rng.normal(size=t.shape))))


def _unario(op) -> Caso:
    def caso(rng):
        a = _param(rng, 4, 5)
        w = Tensor(rng.normal(size=op(Tensor(a.data)).shape))
        return (lambda: dm.sum_all(dm.mul(op(a), w))), [a]
    return caso


def _binario(op, forma_b=(4, 5)) -> Caso:
    def caso(rng):
        a, b = _param(rng, 4, 5), _param(rng, *forma_b)
        w = Tensor(rng.normal(size=op(Tensor(a.data), Tensor(b.data)).shape))
        return (lambda: dm.sum_all(dm.mul(op(a, b), w))), [a, b]
    return caso


def _caso_matmul(rng):
    a, b = _param(rng, 3, 4), _param(rng, 4, 2)
    w = Tensor(rng.normal(size=(3, 2)))
    return (lambda: dm.sum_all(dm.mul(dm.matmul(a, b), w))), [a, b]


def _caso_concat(rng):
    a, b = _param(rng, 3, 2), _param(rng, 3, 4)
    w = Tensor(rng.normal(size=(3, 6)))
    return (lambda: dm.sum_all(dm.mul(dm.concat([a, b], axis=1), w))), [a, b]


def _caso_gather(rng):
    a = _param(rng, 5, 3)
    indices = np.array([0, 2, 2, 4, 1, 0])
    w = Tensor(rng.normal(size=(6, 3)))
    return (lambda: dm.sum_all(dm.mul(dm.gather(a, indices), w))), [a]


def _caso_max_pool_2d(rng):
    a = _param(rng, 4, 4, 2)
    w = Tensor(rng.normal(size=(2, 2, 2)))
    return (lambda: dm.sum_all(dm.mul(dm.max_pool_2d(a, 2), w))), [a]


def _caso_softmax_ce(rng):
    logits = _param(rng, 4, 6)
    objetivos = rng.integers(0, 6, size=4)
    return (lambda: dm.softmax_cross_entropy(logits, objetivos)), [logits]


def _caso_conv2d(rng):
    x, w, b = _param(rng, 5, 5, 2), _param(rng, 3, 3, 2, 3), _param(rng, 3)
    pesos = Tensor(rng.normal(size=(3, 3, 3)))
    return (lambda: dm.sum_all(dm.mul(dm.conv2d(x, w, b, stride=2, padding=1), pesos))), [x, w, b]


def _caso_conv3d(rng):
    x, w, b = _param(rng, 4, 4, 4, 1), _param(rng, 3, 3, 3, 1, 2), _param(rng, 2)
    posiciones = np.sort(rng.choice(64, size=10, replace=False))
    pesos = Tensor(rng.normal(size=(10, 2)))
    return (lambda: dm.sum_all(dm.mul(dm.conv3d(x, w, b, stride=1, padding=1, out_positions=posiciones), pesos))), [x, w, b]


def _frame_plano(tamano: int = 16) -> Tuple[DepthMap, CameraIntrinsics]:
    """Plano inclinado entre 1.5 m y 2.5 m, todos los píxeles válidos"""
    K = CameraIntrinsics.from_fov(tamano, tamano, 60.0)
    K = CameraIntrinsics(K.fx, K.fy, (tamano - 1) / 2.0, (tamano - 1) / 2.0, tamano, tamano)
    v, u = np.mgrid[0:tamano, 0:tamano]
    return DepthMap(1.5 + (u + 0.5 * v) / (1.5 * tamano)), K


def _vista(formato: ViewFormat, rng: np.random.Generator):
    depth, K = _frame_plano()
    crop = CropSpec.full(K.width, K.height)
    if formato is ViewFormat.IMAGE:
        color = ColorImage(rng.uniform(size=(K.height, K.width, 3)))
        return make_image_view(color, depth, K, crop, AugmentParams.identity())
    return make_view(depth, K, crop, formato, AugmentParams.identity(), voxel_size=TINY_ENCODER.voxel_size)


def _caso_encoder(formato: ViewFormat) -> Caso:
    def caso(rng):
        params = init_encoder(formato, TINY_ENCODER, rng)
        vista = _vista(formato, rng)
        forma = tuple(encode(vista, params).features.shape)
        w = Tensor(rng.normal(size=forma))
        return (lambda: dm.sum_all(dm.mul(encode(vista, params).features, w))), params.parameters()
    return caso


def _caso_cabeza(rng):
    params = init_encoder(ViewFormat.POINT, TINY_ENCODER, rng)
    cabeza = init_head(TINY_ENCODER, rng)
    vista = _vista(ViewFormat.POINT, rng)
    fs = encode(vista, params)
    w = Tensor(rng.normal(size=(TINY_ENCODER.head_out,)))
    return (lambda: dm.sum_all(dm.mul(pool_project(fs, cabeza).vector, w))), cabeza.parameters()


class _Features:
    def __init__(self, features: Tensor):
        self.features = features


def _caso_local_infonce(rng):
    a, b = _param(rng, 6, 4), _param(rng, 7, 4)
    pares = PairSet(np.arange(6), rng.permutation(7)[:6])
    return (lambda: local_infonce(_Features(a), _Features(b), pares, tau=0.5)), [a, b]


def _caso_global_infonce(rng):
    q = _param(rng, 4)
    k = rng.normal(size=4)
    banco = MemoryBank(5, 4)
    banco.fill_random(rng)
    return (lambda: global_infonce(q, k / np.linalg.norm(k), banco, tau=0.5)), [q]


def _caso_estrategia(rng):
    """Pérdida completa de un frame DPCo: dos términos locales y dos globales"""
    cfg = TrainConfig(
        seed=0,
        strategy=StrategyConfig(kind="dpco"),
        contrast=ContrastConfig(bank_size=4, match_radius=0.5, max_pairs=8),
        encoder=TINY_ENCODER.model_copy(update={"depth_input_size": 32}),
    )
    state, plan = build_strategy(cfg, rng)
    depth, K = _frame_plano(32)
    frame = PosedFrame(depth, ColorImage(rng.uniform(size=(32, 32, 3))), K, np.eye(4))
    for _ in range(8):
        vistas = prepare_views(frame, plan, rng)
        if not isinstance(vistas, SkippedFrame):
            break
    else:
        raise DegenerateBatchError("ningún recorte produjo vistas válidas")
    semilla_pares = int(rng.integers(2 ** 31))
    return (
        lambda: frame_loss(state, vistas, cfg, np.random.default_rng(semilla_pares), plan)
    ), list(state.parameters())


GRADIENT_CASES: Dict[str, Caso] = {
    "add": _binario(dm.add),
    "add_broadcast": _binario(dm.add, (5,)),
    "sub": _binario(dm.sub),
    "mul": _binario(dm.mul),
    "mul_broadcast": _binario(dm.mul, (1, 5)),
    "scale": _unario(lambda t: dm.scale(t, -1.7)),
    "sum": _unario(lambda t: dm.reshape(dm.sum_all(t), (1,))),
    "mean": _unario(lambda t: dm.reshape(dm.mean(t), (1,))),
    "reshape": _unario(lambda t: dm.reshape(t, (5, 4))),
    "relu": _unario(dm.relu),
    "matmul": _caso_matmul,
    "transpose": _unario(dm.transpose),
    "concat": _caso_concat,
    "gather": _caso_gather,
    "max_reduce": _unario(lambda t: dm.max_reduce(t, axis=1)),
    "max_pool_global": _unario(dm.max_pool_global),
    "max_pool_2d": _caso_max_pool_2d,
    "layer_norm": _unario(dm.layer_norm),
    "l2_normalize": _unario(lambda t: dm.l2_normalize(t, axis=1)),
    "softmax_cross_entropy": _caso_softmax_ce,
    "conv2d": _caso_conv2d,
    "conv3d": _caso_conv3d,
    "encoder_depth": _caso_encoder(ViewFormat.DEPTH),
    "encoder_point": _caso_encoder(ViewFormat.POINT),
    "encoder_voxel": _caso_encoder(ViewFormat.VOXEL),
    "encoder_image": _caso_encoder(ViewFormat.IMAGE),
    "projection_head": _caso_cabeza,
    "local_infonce": _caso_local_infonce,
    "global_infonce": _caso_global_infonce,
    "strategy_loss": _caso_estrategia,
}


def run_gradient_suite(
    seeds: Iterable[int] = range(10),
    cases: Optional[Iterable[str]] = None,
    tolerance: float = 1e-4,
) -> List[GradCheckResult]:
    """
    Verifica por diferencias finitas cada caso en cada semilla

    Args:
        seeds: Semillas (una instancia aleatoria por caso y semilla)
        cases: Nombres de casos (None = todos)
        tolerance: Error relativo máximo aceptado

    Returns:
        Lista de GradCheckResult
    """
    inicio = time.perf_counter()
    nombres = list(cases) if cases is not None else list(GRADIENT_CASES)
    resultados = []
    for nombre in nombres:
        caso = GRADIENT_CASES[nombre]
        for semilla in seeds:
            rng = np.random.default_rng(semilla)
            fn, tensores = caso(rng)
            resultados.append(check_gradients(fn, tensores, rng, tolerance=tolerance, name=f"{nombre}[{semilla}]"))

    fallidos = [r for r in resultados if not r.passed]
    if fallidos:
        logger.error(f"❌ {len(fallidos)}/{len(resultados)} verificaciones fallaron: {[r.name for r in fallidos]}")
    else:
        logger.info(
            f"✅ {len(resultados)} verificaciones de gradiente OK en {time.perf_counter() - inicio:.1f}s "
            f"(error máx {max((r.max_rel_error for r in resultados), default=0.0):.2e})"
        )
    return resultados
