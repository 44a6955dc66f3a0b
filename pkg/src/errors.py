"""
Jerarquía de excepciones de Contrasta3D
Cada tipo de error del sistema tiene su propia clase para que el
orquestador decida si omite el paso o aborta la ejecución
"""


class Contrasta3DError(Exception):
    """Error base de Contrasta3D"""


class ConfigurationError(Contrasta3DError):
    """Configuración inválida (dimensiones, estrategia desconocida, grilla excedida)"""


class GridOverflowError(ConfigurationError):
    """La grilla densa de voxels supera el límite configurado"""


class EmptyInputError(Contrasta3DError):
    """Entrada vacía: sin píxeles válidos, sin puntos o FeatureSet sin filas"""


class ShapeError(Contrasta3DError):
    """Formas de tensores incompatibles"""

    def __init__(self, operacion: str, forma_a, forma_b=None):
        self.operacion = operacion
        self.forma_a = tuple(forma_a) if forma_a is not None else None
        self.forma_b = tuple(forma_b) if forma_b is not None else None
        mensaje = f"{operacion}: formas incompatibles {self.forma_a}"
        if forma_b is not None:
            mensaje += f" y {self.forma_b}"
        super().__init__(mensaje)


class ContractError(Contrasta3DError):
    """Violación de contrato (pérdida no escalar, clave no unitaria, etc.)"""


class DegenerateBatchError(Contrasta3DError):
    """Lote degenerado: menos de 2 pares para la pérdida local"""


class DegenerateBankError(Contrasta3DError):
    """Memory bank vacío: la pérdida global no tiene negativos"""


class DegeneratePoseError(Contrasta3DError):
    """Ningún rayo de la cámara intersecta la escena"""


class GenerationError(Contrasta3DError):
    """No se pudo generar un par de frames con solapamiento suficiente"""


class PairRejectedError(Contrasta3DError):
    """Par de vistas rechazado por solapamiento insuficiente"""

    def __init__(self, solapamiento: float, minimo: float):
        self.solapamiento = solapamiento
        self.minimo = minimo
        super().__init__(f"Solapamiento {solapamiento:.1%} menor al mínimo {minimo:.1%}")


class NonFiniteGradientError(Contrasta3DError):
    """Gradiente no finito detectado antes del paso de SGD"""

    def __init__(self, nombre_tensor: str, cantidad: int):
        self.nombre_tensor = nombre_tensor
        self.cantidad = cantidad
        super().__init__(f"Gradiente no finito en '{nombre_tensor}' ({cantidad} valores NaN/Inf)")
