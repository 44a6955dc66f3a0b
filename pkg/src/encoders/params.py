"""
Parámetros de encoders y estructuras de salida (FeatureSet, GlobalFeature)
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from ..diffmath import Tensor
from ..errors import ConfigurationError, ContractError
from ..geometry import ViewFormat


@dataclass
class EncoderParams:
    """
    Tensores de parámetros con nombre de un encoder (o cabeza de proyección)

    Args:
        format: Formato al que sirve ('head' para la cabeza de proyección)
        tensors: Diccionario ordenado nombre -> Tensor
        hyper: Hiperparámetros de arquitectura
    """

    format: str
    tensors: Dict[str, Tensor] = field(default_factory=dict)
    hyper: Dict[str, object] = field(default_factory=dict)

    def add(self, nombre: str, tensor: Tensor) -> Tensor:
        if nombre in self.tensors:
            raise ConfigurationError(f"Parámetro duplicado: {nombre}")
        tensor.name = nombre
        self.tensors[nombre] = tensor
        return tensor

    def __getitem__(self, nombre: str) -> Tensor:
        return self.tensors[nombre]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def parameters(self) -> List[Tensor]:
        return list(self.tensors.values())

    def num_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def mirror(self) -> "EncoderParams":
        """Copia profunda sin seguimiento de gradiente (encoder momentum)"""
        copia = EncoderParams(self.format, hyper=dict(self.hyper))
        for nombre, tensor in self.tensors.items():
            copia.add(nombre, Tensor(tensor.data.copy(), requires_grad=False))
        return copia

    def check_finite(self) -> None:
        for nombre, tensor in self.tensors.items():
            if not np.all(np.isfinite(tensor.data)):
                raise ContractError(f"Parámetro no finito: {nombre}")


@dataclass
class FeatureSet:
    """Una fila de features por elemento de salida, con su anchor 3D"""

    features: Tensor
    anchors: np.ndarray

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=np.float64).reshape(-1, 3)
        if self.features.ndim != 2 or self.features.shape[0] != len(self.anchors):
            raise ContractError(
                f"FeatureSet inconsistente: features {self.features.shape}, anchors {self.anchors.shape}"
            )

    def __len__(self) -> int:
        return len(self.anchors)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class GlobalFeature:
    """Vector global proyectado y normalizado (q o k)"""

    vector: Tensor

    @property
    def data(self) -> np.ndarray:
        return self.vector.data

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def init_weight(rng: np.random.Generator, forma, fan_in: Optional[int] = None) -> Tensor:
    """Inicialización He normal"""
    fan_in = fan_in if fan_in is not None else int(np.prod(forma[:-1]))
    return Tensor(rng.normal(0.0, np.sqrt(2.0 / max(fan_in, 1)), size=forma), requires_grad=True)


def init_bias(n: int) -> Tensor:
    return Tensor(np.zeros(n), requires_grad=True)


def format_key(format) -> str:
    return format.value if isinstance(format, ViewFormat) else str(format)
