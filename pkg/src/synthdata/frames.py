"""
Fuentes de frames: sintéticos (renderizados a demanda) o leídos de un directorio
Un ítem es un PosedFrame, o una tupla (frame_a, frame_b) en modo pares
"""
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..config import RenderConfig
from ..errors import ConfigurationError, DegeneratePoseError, GenerationError
from ..geometry import (
    CameraIntrinsics,
    ColorImage,
    read_color_ppm,
    read_depth_pgm,
    read_intrinsics,
    read_pose,
    write_color_ppm,
    write_depth_pgm,
    write_intrinsics,
    write_pose,
)
from .renderer import BadPixelModel, PosedFrame, render, render_pair
from .scene import generate_scene, sample_camera_pose

Item = Union[PosedFrame, Tuple[PosedFrame, PosedFrame]]

# Rango aceptado de píxeles malos por frame
MIN_BAD_FRACTION = 0.01
MAX_BAD_FRACTION = 0.40
MAX_FRAME_ATTEMPTS = 50
FRAME_CACHE_SIZE = 64


class SyntheticFrames:
    """
    Frames sintéticos deterministas por índice

    El frame i se genera con default_rng([seed, start + i]), así el contenido
    no depende del orden de acceso ni de cuántos hilos lo piden. Los últimos
    `cache_size` ítems usados quedan en un cache LRU compartido entre hilos;
    si dos hilos piden a la vez un índice ausente, ambos lo renderizan con
    idéntico resultado.

    Args:
        cfg: Configuración de cámara y escena
        count: Cantidad de ítems
        seed: Semilla base
        pairs: Si True cada ítem es un par solapado (frame_a, frame_b)
        start: Desplazamiento de índices (para conjuntos de validación disjuntos)
        min_overlap: Solapamiento mínimo de los pares
        cache_size: Ítems retenidos en memoria (0 = sin cache)
    """

    def __init__(
        self,
        cfg: Optional[RenderConfig] = None,
        count: int = 200,
        seed: int = 0,
        pairs: bool = False,
        start: int = 0,
        min_overlap: float = 0.3,
        cache_size: int = FRAME_CACHE_SIZE,
    ):
        if count < 0:
            raise ConfigurationError(f"count debe ser >= 0, recibido {count}")
        if cache_size < 0:
            raise ConfigurationError(f"cache_size debe ser >= 0, recibido {cache_size}")
        self.cfg = cfg or RenderConfig()
        self.count = count
        self.seed = seed
        self.pairs = pairs
        self.start = start
        self.min_overlap = min_overlap
        self.intrinsics = CameraIntrinsics.from_fov(self.cfg.width, self.cfg.height, self.cfg.fov_deg)
        self.bad_pixel_model = BadPixelModel.from_config(self.cfg)
        self.cache_size = cache_size
        self._cache: "OrderedDict[int, Item]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, indice: int) -> Item:
        if not 0 <= indice < self.count:
            raise IndexError(f"Frame {indice} fuera de rango (0..{self.count - 1})")
        with self._lock:
            if indice in self._cache:
                self._cache.move_to_end(indice)
                return self._cache[indice]

        item = self._generar(indice)
        if self.cache_size:
            with self._lock:
                self._cache[indice] = item
                self._cache.move_to_end(indice)
                while len(self._cache) > self.cache_size:
                    self._cache.popitem(last=False)
        return item

    @property
    def cached(self) -> int:
        with self._lock:
            return len(self._cache)

    def __iter__(self):
        for indice in range(self.count):
            yield self[indice]

    def _generar(self, indice: int) -> Item:
        global_idx = self.start + indice
        rng = np.random.default_rng([self.seed, global_idx])

        for _ in range(MAX_FRAME_ATTEMPTS):
            escena = generate_scene(rng, self.cfg)
            try:
                if self.pairs:
                    a, b = render_pair(
                        escena, self.intrinsics, self.cfg.baseline, rng,
                        max_rotation_deg=self.cfg.max_rotation_deg,
                        min_overlap=self.min_overlap,
                        bad_pixel_model=self.bad_pixel_model,
                    )
                    if _fraccion_aceptable(a) and _fraccion_aceptable(b):
                        a.index, b.index = 2 * global_idx, 2 * global_idx + 1
                        return a, b
                else:
                    frame = render(escena, sample_camera_pose(escena, rng), self.intrinsics, self.bad_pixel_model)
                    if _fraccion_aceptable(frame):
                        frame.index = global_idx
                        return frame
            except (DegeneratePoseError, GenerationError) as e:
                logger.trace(f"Frame {global_idx}: reintento ({e})")

        raise GenerationError(f"Frame {global_idx}: sin render aceptable en {MAX_FRAME_ATTEMPTS} escenas")


def _fraccion_aceptable(frame: PosedFrame) -> bool:
    return MIN_BAD_FRACTION <= frame.bad_fraction <= MAX_BAD_FRACTION


def frame_stem(indice: int) -> str:
    return f"frame_{indice:05d}"


class DirectoryFrames:
    """
    Frames leídos de un directorio con el layout de `synth`

    frame_XXXXX_depth.pgm, frame_XXXXX_color.ppm (opcional),
    frame_XXXXX_pose.txt y frame_XXXXX_intrinsics.txt (o un intrinsics.txt común).
    En modo pares, archivos consecutivos (0-1, 2-3, ...) forman un par.

    Args:
        path: Directorio
        pairs: Agrupar frames consecutivos de a dos
    """

    def __init__(self, path, pairs: bool = False):
        self.path = Path(path)
        if not self.path.is_dir():
            raise ConfigurationError(f"Directorio de frames no encontrado: {self.path}")
        self.pairs = pairs
        self.stems: List[str] = sorted(
            p.name[: -len("_depth.pgm")] for p in self.path.glob("frame_*_depth.pgm")
        )
        if not self.stems:
            raise ConfigurationError(f"{self.path}: no hay archivos frame_*_depth.pgm")
        if pairs and len(self.stems) % 2:
            logger.warning(f"⚠️ {self.path}: cantidad impar de frames, se descarta el último")
        logger.info(f"📂 {len(self.stems)} frames en {self.path}")

    def __len__(self) -> int:
        return len(self.stems) // 2 if self.pairs else len(self.stems)

    def __getitem__(self, indice: int) -> Item:
        if not 0 <= indice < len(self):
            raise IndexError(f"Frame {indice} fuera de rango (0..{len(self) - 1})")
        if self.pairs:
            return self._leer(2 * indice), self._leer(2 * indice + 1)
        return self._leer(indice)

    def __iter__(self):
        for indice in range(len(self)):
            yield self[indice]

    def _leer(self, posicion: int) -> PosedFrame:
        stem = self.stems[posicion]
        depth = read_depth_pgm(self.path / f"{stem}_depth.pgm")

        ruta_k = self.path / f"{stem}_intrinsics.txt"
        K = read_intrinsics(ruta_k if ruta_k.exists() else self.path / "intrinsics.txt")
        if (K.width, K.height) != (depth.width, depth.height):
            raise ConfigurationError(f"{stem}: intrínsecos {K.width}x{K.height} no coinciden con la profundidad")

        ruta_pose = self.path / f"{stem}_pose.txt"
        pose = read_pose(ruta_pose) if ruta_pose.exists() else np.eye(4)

        ruta_color = self.path / f"{stem}_color.ppm"
        if ruta_color.exists():
            color = read_color_ppm(ruta_color)
        else:
            color = ColorImage(np.zeros((depth.height, depth.width, 3)))

        try:
            indice = int(stem.split("_")[1])
        except (IndexError, ValueError):
            indice = posicion
        return PosedFrame(depth=depth, color=color, intrinsics=K, pose=pose, index=indice)


def _escribir_frame(frame: PosedFrame, destino: Path, indice: int) -> None:
    stem = frame_stem(indice)
    write_depth_pgm(destino / f"{stem}_depth.pgm", frame.depth)
    write_color_ppm(destino / f"{stem}_color.ppm", frame.color)
    write_pose(destino / f"{stem}_pose.txt", frame.pose)
    write_intrinsics(destino / f"{stem}_intrinsics.txt", frame.intrinsics)


def write_frames(source, out_dir, workers: int = 0) -> int:
    """
    Escribe una fuente de frames al layout de directorio de `synth`

    Args:
        source: SyntheticFrames o cualquier secuencia de ítems
        out_dir: Directorio destino (se crea si no existe)
        workers: Hilos de render (0 = secuencial)

    Returns:
        Cantidad de archivos de frame escritos
    """
    destino = Path(out_dir)
    destino.mkdir(parents=True, exist_ok=True)

    def tarea(i: int) -> int:
        item = source[i]
        if isinstance(item, tuple):
            _escribir_frame(item[0], destino, 2 * i)
            _escribir_frame(item[1], destino, 2 * i + 1)
            return 2
        _escribir_frame(item, destino, i)
        return 1

    if workers > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            escritos = sum(pool.map(tarea, range(len(source))))
    else:
        escritos = sum(tarea(i) for i in range(len(source)))

    logger.info(f"✅ {escritos} frames escritos en {destino}")
    return escritos
