"""
Ray casting de escenas procedurales a frames RGB-D con píxeles malos
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from ..config import RenderConfig
from ..errors import DegeneratePoseError, GenerationError
from ..geometry import CameraIntrinsics, ColorImage, DepthMap, overlap_fraction
from .scene import Scene, sample_camera_pose

_EPS = 1e-9
_LUZ = np.array([0.3, 0.5, 1.0]) / np.linalg.norm([0.3, 0.5, 1.0])
_AMBIENTE = 0.2


@dataclass
class BadPixelModel:
    """
    Modelo de píxeles malos

    Args:
        grazing_threshold: Píxeles con |normal·rayo| menor a este valor se invalidan
        edge_jump: Salto de profundidad (m) entre vecinos que marca una discontinuidad
        edge_band_px: Dilatación (px) de la banda alrededor de las discontinuidades
    """

    grazing_threshold: float = 0.1
    edge_jump: float = 0.10
    edge_band_px: int = 2

    @classmethod
    def from_config(cls, cfg: RenderConfig) -> "BadPixelModel":
        return cls(cfg.grazing_threshold, cfg.edge_jump, cfg.edge_band_px)


@dataclass
class PosedFrame:
    """Frame RGB-D con intrínsecos y pose cámara -> mundo"""

    depth: DepthMap
    color: ColorImage
    intrinsics: CameraIntrinsics
    pose: np.ndarray
    index: int = 0

    @property
    def bad_fraction(self) -> float:
        return 1.0 - self.depth.valid_count / self.depth.values.size


def camera_rays(pose: np.ndarray, K: CameraIntrinsics) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rayos de todos los píxeles en el marco mundo

    La dirección tiene componente z = 1 en el marco de cámara, así el
    parámetro t del rayo es directamente la profundidad.

    Returns:
        (origen (3,), direcciones HxWx3)
    """
    v, u = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    camara = np.stack([(u - K.cx) / K.fx, (v - K.cy) / K.fy, np.ones_like(u)], axis=-1)
    return pose[:3, 3].copy(), camara @ pose[:3, :3].T


def _intersectar_piso(origen, dirs):
    dz = dirs[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(dz) > _EPS, -origen[2] / dz, np.inf)
    t = np.where(t > _EPS, t, np.inf)
    normal = np.zeros(dirs.shape)
    normal[..., 2] = 1.0
    return t, normal


def _intersectar_esfera(origen, dirs, centro, radio):
    oc = origen - np.asarray(centro)
    a = np.sum(dirs * dirs, axis=-1)
    b = 2.0 * (dirs @ oc)
    c = float(oc @ oc) - radio * radio
    disc = b * b - 4.0 * a * c
    raiz = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - raiz) / (2.0 * a)
    t2 = (-b + raiz) / (2.0 * a)
    t = np.where(t1 > _EPS, t1, np.where(t2 > _EPS, t2, np.inf))
    t = np.where(disc >= 0, t, np.inf)
    punto = origen + dirs * np.where(np.isfinite(t), t, 0.0)[..., None]
    normal = (punto - np.asarray(centro)) / radio
    return t, normal


def _intersectar_caja(origen, dirs, lo, hi):
    """Método de slabs; se ignoran las cajas que contienen a la cámara"""
    seguras = np.where(np.abs(dirs) > _EPS, dirs, _EPS)
    t_lo = (np.asarray(lo) - origen) / seguras
    t_hi = (np.asarray(hi) - origen) / seguras
    t_min = np.minimum(t_lo, t_hi)
    t_max = np.maximum(t_lo, t_hi)
    t_cerca = t_min.max(axis=-1)
    t_lejos = t_max.min(axis=-1)
    golpe = (t_cerca <= t_lejos) & (t_cerca > _EPS)
    t = np.where(golpe, t_cerca, np.inf)

    eje = np.argmax(t_min, axis=-1)
    normal = np.zeros(dirs.shape)
    signo = -np.sign(np.take_along_axis(dirs, eje[..., None], axis=-1))[..., 0]
    np.put_along_axis(normal, eje[..., None], signo[..., None], axis=-1)
    return t, normal


def render(
    scene: Scene,
    pose: np.ndarray,
    K: CameraIntrinsics,
    bad_pixel_model: Optional[BadPixelModel] = None,
    index: int = 0,
) -> PosedFrame:
    """
    Renderiza profundidad y color por ray casting

    Args:
        scene: Escena
        pose: Pose cámara -> mundo (4x4)
        K: Intrínsecos
        bad_pixel_model: Modelo de píxeles malos (None = por defecto)
        index: Índice del frame

    Returns:
        PosedFrame con los píxeles malos en cero

    Raises:
        DegeneratePoseError: Si ningún rayo intersecta la escena
    """
    modelo = bad_pixel_model or BadPixelModel()
    origen, dirs = camera_rays(pose, K)
    alto, ancho = dirs.shape[:2]

    profundidad = np.full((alto, ancho), np.inf)
    normales = np.zeros((alto, ancho, 3))
    albedo = np.zeros((alto, ancho, 3))

    def componer(t, normal, color):
        nonlocal profundidad
        mas_cerca = t < profundidad
        profundidad = np.where(mas_cerca, t, profundidad)
        normales[mas_cerca] = normal[mas_cerca]
        albedo[mas_cerca] = color

    if scene.floor:
        componer(*_intersectar_piso(origen, dirs), scene.floor_albedo)
    for caja in scene.solid_boxes:
        componer(*_intersectar_caja(origen, dirs, caja.lo, caja.hi), caja.albedo)
    for esfera in scene.spheres:
        componer(*_intersectar_esfera(origen, dirs, esfera.center, esfera.radius), esfera.albedo)

    golpe = np.isfinite(profundidad)
    if not golpe.any():
        raise DegeneratePoseError("Ningún rayo intersecta la escena desde esta pose")

    # color lambertiano
    sombreado = _AMBIENTE + (1.0 - _AMBIENTE) * np.clip(normales @ _LUZ, 0.0, 1.0)
    color = np.where(golpe[..., None], albedo * sombreado[..., None], 0.0)

    # píxeles malos: ángulos rasantes y bandas en discontinuidades
    unitarias = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    coseno = np.abs(np.sum(normales * unitarias, axis=-1))
    rasante = golpe & (coseno < modelo.grazing_threshold)
    bordes = _discontinuidades(np.where(golpe, profundidad, np.nan), modelo.edge_jump)
    if modelo.edge_band_px > 0 and bordes.any():
        bordes = ndimage.binary_dilation(bordes, iterations=modelo.edge_band_px)
    validos = golpe & ~rasante & ~bordes

    depth = DepthMap(np.where(golpe, profundidad, 0.0), validos)
    return PosedFrame(depth=depth, color=ColorImage(color), intrinsics=K, pose=np.asarray(pose, dtype=np.float64), index=index)


def _discontinuidades(profundidad: np.ndarray, salto: float) -> np.ndarray:
    """Píxeles con un vecino (4-conectado) cuya profundidad difiere más que salto"""
    bordes = np.zeros(profundidad.shape, dtype=bool)
    with np.errstate(invalid="ignore"):
        dv = np.abs(np.diff(profundidad, axis=0)) > salto
        du = np.abs(np.diff(profundidad, axis=1)) > salto
    bordes[:-1] |= dv
    bordes[1:] |= dv
    bordes[:, :-1] |= du
    bordes[:, 1:] |= du
    return bordes


def _rotacion_aleatoria(rng: np.random.Generator, angulo_max: float) -> np.ndarray:
    """Rotación de eje uniforme y ángulo uniforme en [0, angulo_max] (Rodrigues)"""
    eje = rng.normal(size=3)
    eje /= np.linalg.norm(eje)
    angulo = rng.uniform(0.0, angulo_max)
    k = np.array([[0, -eje[2], eje[1]], [eje[2], 0, -eje[0]], [-eje[1], eje[0], 0]])
    return np.eye(3) + np.sin(angulo) * k + (1 - np.cos(angulo)) * (k @ k)


def render_pair(
    scene: Scene,
    K: CameraIntrinsics,
    baseline: float,
    rng: np.random.Generator,
    pose: Optional[np.ndarray] = None,
    max_rotation_deg: float = 30.0,
    min_overlap: float = 0.3,
    bad_pixel_model: Optional[BadPixelModel] = None,
    max_attempts: int = 50,
) -> Tuple[PosedFrame, PosedFrame]:
    """
    Renderiza dos frames solapados de la misma escena

    La segunda pose difiere de la primera por una rotación <= max_rotation_deg
    y una traslación <= baseline. Con baseline 0 las dos poses coinciden.

    Args:
        scene: Escena
        K: Intrínsecos
        baseline: Traslación máxima (m)
        rng: Generador de números aleatorios
        pose: Pose del primer frame (None = muestreada)
        max_rotation_deg: Rotación máxima entre poses
        min_overlap: Solapamiento mínimo en ambas direcciones
        bad_pixel_model: Modelo de píxeles malos
        max_attempts: Intentos antes de rendirse

    Returns:
        (frame_a, frame_b)

    Raises:
        GenerationError: Si se agotan los intentos
    """

    mejor = 0.0
    for intento in range(max_attempts):
        pose_a = pose if pose is not None else sample_camera_pose(scene, rng)
        pose_b = pose_a.copy()
        if baseline > 0:
            pose_b[:3, :3] = pose_a[:3, :3] @ _rotacion_aleatoria(rng, np.radians(max_rotation_deg))
            direccion = rng.normal(size=3)
            pose_b[:3, 3] = pose_a[:3, 3] + direccion / np.linalg.norm(direccion) * rng.uniform(0.0, baseline)
        try:
            frame_a = render(scene, pose_a, K, bad_pixel_model, index=0)
            frame_b = render(scene, pose_b, K, bad_pixel_model, index=1)
        except DegeneratePoseError:
            continue

        solapamiento = min(
            overlap_fraction(frame_a.depth, pose_a, frame_b.depth, pose_b, K),
            overlap_fraction(frame_b.depth, pose_b, frame_a.depth, pose_a, K),
        )
        mejor = max(mejor, solapamiento)
        if solapamiento >= min_overlap:
            logger.trace(f"Par renderizado en {intento + 1} intentos (solapamiento {solapamiento:.2f})")
            return frame_a, frame_b

    raise GenerationError(
        f"No se logró un par con solapamiento >= {min_overlap:.0%} en {max_attempts} intentos (mejor {mejor:.0%})"
    )
