"""
Formato binario de checkpoints
little-endian: magia, versión, cantidad y luego por tensor
(largo del nombre, nombre utf-8, rango, extensiones, datos float64)
"""
import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np
from loguru import logger

from ..errors import ConfigurationError
from .tensor import Tensor

MAGIC = b"C3DK"
VERSION = 1

_U32 = struct.Struct("<I")


def encode_checkpoint(tensores: Mapping[str, Union[Tensor, np.ndarray]]) -> bytes:
    """Serializa tensores con nombre en el orden de inserción"""
    partes = [MAGIC, _U32.pack(VERSION), _U32.pack(len(tensores))]
    for nombre, valor in tensores.items():
        datos = valor.data if isinstance(valor, Tensor) else np.asarray(valor, dtype=np.float64)
        nombre_bytes = nombre.encode("utf-8")
        partes.append(_U32.pack(len(nombre_bytes)))
        partes.append(nombre_bytes)
        partes.append(_U32.pack(datos.ndim))
        partes.extend(_U32.pack(n) for n in datos.shape)
        partes.append(np.ascontiguousarray(datos, dtype="<f8").tobytes())
    return b"".join(partes)


def decode_checkpoint(datos: bytes) -> Dict[str, np.ndarray]:
    """Deserializa un checkpoint; lanza ConfigurationError si está corrupto"""
    if datos[:4] != MAGIC:
        raise ConfigurationError("Checkpoint inválido: magia desconocida")

    pos = 4

    def leer_u32() -> int:
        nonlocal pos
        if pos + 4 > len(datos):
            raise ConfigurationError("Checkpoint truncado")
        (valor,) = _U32.unpack_from(datos, pos)
        pos += 4
        return valor

    version = leer_u32()
    if version != VERSION:
        raise ConfigurationError(f"Versión de checkpoint no soportada: {version}")

    tensores: Dict[str, np.ndarray] = {}
    for _ in range(leer_u32()):
        largo = leer_u32()
        nombre = datos[pos:pos + largo].decode("utf-8")
        pos += largo
        forma = tuple(leer_u32() for _ in range(leer_u32()))
        cantidad = int(np.prod(forma, dtype=np.int64))
        if pos + 8 * cantidad > len(datos):
            raise ConfigurationError(f"Checkpoint truncado en '{nombre}'")
        valores = np.frombuffer(datos, dtype="<f8", count=cantidad, offset=pos)
        pos += 8 * cantidad
        tensores[nombre] = valores.astype(np.float64).reshape(forma)
    return tensores


def save_checkpoint(ruta, tensores: Mapping[str, Union[Tensor, np.ndarray]]) -> Path:
    """
    Guarda tensores con nombre en disco

    Args:
        ruta: Archivo destino
        tensores: Diccionario nombre -> Tensor o arreglo

    Returns:
        Ruta escrita
    """
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_bytes(encode_checkpoint(tensores))
    logger.debug(f"💾 Checkpoint guardado: {ruta} ({len(tensores)} tensores)")
    return ruta


def load_checkpoint(ruta) -> Dict[str, np.ndarray]:
    """Carga un checkpoint como diccionario ordenado nombre -> arreglo"""
    ruta = Path(ruta)
    if not ruta.exists():
        raise ConfigurationError(f"Checkpoint no encontrado: {ruta}")
    return decode_checkpoint(ruta.read_bytes())
