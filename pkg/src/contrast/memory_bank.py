"""
Memory bank FIFO de claves unitarias (negativos de la pérdida global)
"""
from typing import Iterable, Union

import numpy as np
from loguru import logger

from ..errors import ConfigurationError, ContractError

# tolerancia de norma aceptada al encolar
NORM_TOLERANCE = 1e-6


class MemoryBank:
    """
    Cola circular de N claves de dimensión D

    Las claves se escriben en write_cursor y sobrescriben las más antiguas
    al dar la vuelta; filled_count nunca supera la capacidad.
    """

    def __init__(self, capacity: int, dim: int):
        if capacity < 1 or dim < 1:
            raise ConfigurationError(f"MemoryBank inválido: capacidad {capacity}, dimensión {dim}")
        self.storage = np.zeros((capacity, dim))
        self.write_cursor = 0
        self.filled_count = 0

    @property
    def capacity(self) -> int:
        return self.storage.shape[0]

    @property
    def dim(self) -> int:
        return self.storage.shape[1]

    def __len__(self) -> int:
        return self.filled_count

    def __repr__(self):
        return f"<MemoryBank {self.filled_count}/{self.capacity} cursor={self.write_cursor}>"

    def keys(self) -> np.ndarray:
        """Claves almacenadas (filas [0, filled_count))"""
        return self.storage[:self.filled_count].copy()

    def enqueue(self, keys: Union[np.ndarray, Iterable]) -> None:
        """
        Encola claves unitarias

        Args:
            keys: Lista de GlobalFeature / vectores, o matriz n x D

        Raises:
            ContractError: Si una clave no tiene norma 1 (tolerancia 1e-6) o dimensión distinta
        """
        if isinstance(keys, np.ndarray):
            matriz = keys.reshape(-1, self.dim) if keys.size else np.zeros((0, self.dim))
        else:
            filas = [np.asarray(getattr(k, "data", k), dtype=np.float64).reshape(-1) for k in keys]
            if not filas:
                return
            if any(f.shape[0] != self.dim for f in filas):
                raise ContractError(f"Clave de dimensión distinta a {self.dim}")
            matriz = np.vstack(filas)

        normas = np.linalg.norm(matriz, axis=1)
        if np.any(np.abs(normas - 1.0) > NORM_TOLERANCE) or not np.all(np.isfinite(normas)):
            peor = float(normas[np.argmax(np.abs(normas - 1.0))])
            raise ContractError(f"Clave con norma {peor:.9f} (se requiere 1 ± {NORM_TOLERANCE})")

        for fila, norma in zip(matriz, normas):
            self.storage[self.write_cursor] = fila / norma
            self.write_cursor = (self.write_cursor + 1) % self.capacity
        self.filled_count = min(self.capacity, self.filled_count + len(matriz))

    def fill_random(self, rng: np.random.Generator) -> None:
        """Llena el banco con vectores unitarios aleatorios"""
        aleatorias = rng.standard_normal(self.storage.shape)
        self.storage = aleatorias / np.linalg.norm(aleatorias, axis=1, keepdims=True)
        self.write_cursor = 0
        self.filled_count = self.capacity
        logger.debug(f"MemoryBank inicializado con {self.capacity} claves aleatorias")

    def state(self) -> np.ndarray:
        """Estado serializable: [cursor, filled] seguido de las claves"""
        return np.concatenate([[self.write_cursor, self.filled_count], self.storage.reshape(-1)]).astype(np.float64)

    def load_state(self, estado: np.ndarray) -> None:
        estado = np.asarray(estado, dtype=np.float64).reshape(-1)
        if estado.size != 2 + self.storage.size:
            raise ConfigurationError("Estado de MemoryBank con tamaño incompatible")
        self.write_cursor = int(estado[0])
        self.filled_count = int(estado[1])
        self.storage = estado[2:].reshape(self.storage.shape).copy()


def bank_enqueue(bank: MemoryBank, keys) -> None:
    """Encola claves unitarias en el banco (FIFO)"""
    bank.enqueue(keys)
