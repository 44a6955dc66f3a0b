"""
Lectura y escritura de frames en disco
- Profundidad: PGM binario (P5) de 16 bits, valor = milímetros, 0 = píxel malo
- Color: PPM binario (P6) de 8 bits vía Pillow
- Intrínsecos y poses: archivos de texto clave=valor
"""
from pathlib import Path

import numpy as np
from dotenv import dotenv_values
from loguru import logger
from PIL import Image, UnidentifiedImageError

from ..errors import ConfigurationError
from .types import CameraIntrinsics, ColorImage, DepthMap

CLAVES_INTRINSECOS = ("fx", "fy", "cx", "cy", "width", "height")
CLAVES_POSE = tuple(f"m{fila}{col}" for fila in range(3) for col in range(4))


def write_depth_pgm(ruta, depth: DepthMap) -> None:
    """
    Guarda un mapa de profundidad como PGM de 16 bits en milímetros

    Args:
        ruta: Archivo destino
        depth: Mapa de profundidad en metros
    """
    milimetros = np.clip(np.rint(depth.values * 1000.0), 0, 65535).astype(np.int32)
    milimetros[~depth.valid] = 0
    # modo "I" de Pillow: P5 con maxval 65535
    Image.fromarray(milimetros).save(ruta, format="PPM")


def read_depth_pgm(ruta) -> DepthMap:
    """
    Lee un PGM binario de profundidad (milímetros) y lo convierte a metros

    Args:
        ruta: Archivo PGM

    Returns:
        DepthMap con 0 en los píxeles malos

    Raises:
        ConfigurationError: Si el archivo no es un PGM de escala de grises
    """
    try:
        with Image.open(ruta) as imagen:
            if imagen.mode not in ("I", "I;16", "I;16B", "L"):
                raise ConfigurationError(f"{ruta}: se esperaba PGM de profundidad, modo {imagen.mode}")
            milimetros = np.asarray(imagen, dtype=np.uint16)
    except (OSError, UnidentifiedImageError) as e:
        raise ConfigurationError(f"{ruta}: no se pudo leer la profundidad: {e}") from e

    logger.debug(f"PGM leído: {ruta} ({milimetros.shape[1]}x{milimetros.shape[0]})")
    return DepthMap(milimetros.astype(np.float64) / 1000.0)


def write_color_ppm(ruta, imagen: ColorImage) -> None:
    """Guarda una imagen de color como PPM de 8 bits"""
    datos = np.clip(np.rint(imagen.rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(datos).save(ruta, format="PPM")


def read_color_ppm(ruta) -> ColorImage:
    """Lee una imagen de color (cualquier formato soportado por Pillow)"""
    with Image.open(ruta) as imagen:
        datos = np.asarray(imagen.convert("RGB"), dtype=np.float64)
    return ColorImage(datos / 255.0)


def _leer_clave_valor(ruta, claves) -> dict:
    ruta = Path(ruta)
    if not ruta.exists():
        raise ConfigurationError(f"Archivo no encontrado: {ruta}")
    valores = dotenv_values(ruta)
    faltantes = [c for c in claves if valores.get(c) is None]
    if faltantes:
        raise ConfigurationError(f"{ruta}: faltan claves {faltantes}")
    return valores


def write_intrinsics(ruta, K: CameraIntrinsics) -> None:
    """Guarda los intrínsecos como clave=valor"""
    lineas = [
        f"fx={float(K.fx)!r}", f"fy={float(K.fy)!r}", f"cx={float(K.cx)!r}", f"cy={float(K.cy)!r}",
        f"width={K.width}", f"height={K.height}",
    ]
    Path(ruta).write_text("\n".join(lineas) + "\n", encoding="utf-8")


def read_intrinsics(ruta) -> CameraIntrinsics:
    """Lee intrínsecos desde un archivo clave=valor (fx, fy, cx, cy, width, height)"""
    valores = _leer_clave_valor(ruta, CLAVES_INTRINSECOS)
    try:
        K = CameraIntrinsics(
            fx=float(valores["fx"]), fy=float(valores["fy"]),
            cx=float(valores["cx"]), cy=float(valores["cy"]),
            width=int(valores["width"]), height=int(valores["height"]),
        )
    except ValueError as e:
        raise ConfigurationError(f"{ruta}: intrínsecos inválidos: {e}") from e
    return K.validate()


def write_pose(ruta, pose: np.ndarray) -> None:
    """Guarda una pose rígida 4x4 (cámara -> mundo) como clave=valor"""
    pose = np.asarray(pose, dtype=np.float64)
    lineas = [f"m{fila}{col}={float(pose[fila, col])!r}" for fila in range(3) for col in range(4)]
    Path(ruta).write_text("\n".join(lineas) + "\n", encoding="utf-8")


def read_pose(ruta) -> np.ndarray:
    """Lee una pose rígida 4x4 desde clave=valor"""
    valores = _leer_clave_valor(ruta, CLAVES_POSE)
    pose = np.eye(4)
    for fila in range(3):
        for col in range(4):
            pose[fila, col] = float(valores[f"m{fila}{col}"])
    return pose
