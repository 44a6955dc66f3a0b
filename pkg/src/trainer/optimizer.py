"""
SGD con momentum y schedule coseno
"""
import math
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from ..diffmath import Tensor
from ..errors import ConfigurationError, NonFiniteGradientError


def lr_schedule(step: int, total_steps: int, lr0: float) -> float:
    """
    Learning rate coseno por paso global: lr0 · 0.5 · (1 + cos(π · step / total_steps))

    Args:
        step: Paso global (0 <= step <= total_steps)
        total_steps: Pasos totales de la ejecución
        lr0: Learning rate inicial

    Returns:
        Learning rate del paso
    """
    if total_steps <= 0:
        return lr0
    if not 0 <= step <= total_steps:
        raise ConfigurationError(f"Paso {step} fuera de [0, {total_steps}]")
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def init_velocity(params: Sequence[Tuple[str, Tensor]]) -> Dict[str, np.ndarray]:
    """Velocidades en cero para cada parámetro"""
    return {nombre: np.zeros_like(tensor.data) for nombre, tensor in params}


def sgd_step(
    params: Sequence[Tuple[str, Tensor]],
    grads: Mapping[str, np.ndarray],
    velocity: Dict[str, np.ndarray],
    lr: float,
    momentum: float,
) -> None:
    """
    Paso de SGD con momentum: v <- momentum·v + g; θ <- θ - lr·v

    Se verifican todos los gradientes antes de tocar un solo parámetro.
    Un parámetro sin gradiente se trata como gradiente cero.

    Args:
        params: Pares (nombre, Tensor) entrenables
        grads: Gradiente por nombre
        velocity: Velocidad por nombre (se actualiza en el lugar)
        lr: Learning rate
        momentum: Coeficiente de momentum

    Raises:
        NonFiniteGradientError: Si algún gradiente tiene NaN/Inf (nombra el tensor)
        ConfigurationError: Si la forma de un gradiente no coincide con su parámetro
    """
    for nombre, tensor in params:
        g = grads.get(nombre)
        if g is None:
            continue
        if g.shape != tensor.shape:
            raise ConfigurationError(f"Gradiente de '{nombre}' con forma {g.shape}, parámetro {tensor.shape}")
        malos = int(np.count_nonzero(~np.isfinite(g)))
        if malos:
            raise NonFiniteGradientError(nombre, malos)

    for nombre, tensor in params:
        g = grads.get(nombre)
        v = velocity.get(nombre)
        if v is None:
            v = np.zeros_like(tensor.data)
        v = momentum * v + (g if g is not None else 0.0)
        velocity[nombre] = v
        tensor.data = tensor.data - lr * v
