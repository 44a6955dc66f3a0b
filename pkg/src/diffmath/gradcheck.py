"""
Verificación de gradientes por diferencias finitas centrales
"""
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np
from loguru import logger

from .tensor import Tape, Tensor, backward, no_grad, record_branches


@dataclass
class GradCheckResult:
    """Resultado de una verificación de gradientes"""

    name: str
    checked: int = 0
    rejected: int = 0
    max_rel_error: float = 0.0
    tolerance: float = 1e-4
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.max_rel_error < self.tolerance


def _mismas_ramas(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> bool:
    if len(a) != len(b):
        return False
    return all(x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a, b))


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    rng: np.random.Generator,
    h: float = 1e-5,
    samples: int = 8,
    tolerance: float = 1e-4,
    floor: float = 1e-3,
    name: str = "grafo",
) -> GradCheckResult:
    """
    Compara el gradiente analítico con diferencias finitas centrales

    Args:
        fn: Función sin argumentos que construye la pérdida escalar leyendo tensors
        tensors: Tensores a verificar (requires_grad=True)
        rng: Generador para elegir las coordenadas a perturbar
        h: Paso de la diferencia central
        samples: Coordenadas por tensor
        tolerance: Error relativo máximo aceptado
        floor: Piso del denominador del error relativo
        name: Nombre para los mensajes

    Returns:
        GradCheckResult. Las sondas cuya perturbación cambia una decisión no
        suave (máscara relu, argmax) se descartan y se cuentan en rejected.
    """
    resultado = GradCheckResult(name=name, tolerance=tolerance)

    for t in tensors:
        t.grad = None
    with Tape() as tape:
        loss = fn()
    backward(tape, loss)
    analiticos = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

    def evaluar() -> tuple:
        with no_grad(), record_branches() as ramas:
            valor = float(fn().data)
        return valor, ramas

    for indice, (tensor, analitico) in enumerate(zip(tensors, analiticos)):
        tensor.data = np.ascontiguousarray(tensor.data)
        plano = tensor.data.reshape(-1)
        cantidad = min(samples, plano.size)
        for pos in rng.choice(plano.size, size=cantidad, replace=False):
            original = plano[pos]
            plano[pos] = original + h
            f_mas, ramas_mas = evaluar()
            plano[pos] = original - h
            f_menos, ramas_menos = evaluar()
            plano[pos] = original

            if not _mismas_ramas(ramas_mas, ramas_menos):
                resultado.rejected += 1
                continue

            numerico = (f_mas - f_menos) / (2.0 * h)
            a = analitico.reshape(-1)[pos]
            error = abs(a - numerico) / max(abs(a), abs(numerico), floor)
            resultado.checked += 1
            if error > resultado.max_rel_error:
                resultado.max_rel_error = error
            if error >= tolerance:
                etiqueta = tensor.name or f"tensor[{indice}]"
                resultado.failures.append(
                    f"{etiqueta}[{pos}]: analítico={a:.6e} numérico={numerico:.6e} error={error:.2e}"
                )

    if resultado.passed:
        logger.debug(
            f"✅ {name}: {resultado.checked} sondas, error máx {resultado.max_rel_error:.2e} "
            f"({resultado.rejected} descartadas)"
        )
    else:
        logger.warning(f"⚠️ {name}: error máx {resultado.max_rel_error:.2e} ({len(resultado.failures)} fallas)")
    return resultado
