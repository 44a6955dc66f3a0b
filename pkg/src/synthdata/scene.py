"""
Escenas procedurales: habitación con piso, paredes y primitivas sólidas
Marco mundo con z hacia arriba y piso en z = 0
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from ..config import RenderConfig
from ..errors import ConfigurationError

# espesor de las paredes (cajas delgadas fuera de la habitación)
WALL_THICKNESS = 0.05


@dataclass(frozen=True)
class Box:
    """Caja alineada a los ejes"""

    lo: tuple
    hi: tuple
    albedo: tuple = (0.7, 0.7, 0.7)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float
    albedo: tuple = (0.7, 0.7, 0.7)


@dataclass
class Scene:
    """
    Escena de una habitación

    Args:
        room: (ancho, largo, alto) en metros; la habitación ocupa [0, ancho] x [0, largo]
        floor: Si hay plano de piso (z = 0)
        walls: Paredes (cajas delgadas)
        boxes: Cajas
        spheres: Esferas
        floor_albedo: Color del piso
        seed: Semilla con la que se generó
    """

    room: tuple = (3.0, 3.0, 2.4)
    floor: bool = True
    walls: List[Box] = field(default_factory=list)
    boxes: List[Box] = field(default_factory=list)
    spheres: List[Sphere] = field(default_factory=list)
    floor_albedo: tuple = (0.6, 0.55, 0.5)
    seed: Optional[int] = None

    def __post_init__(self):
        if not (self.floor or self.walls or self.boxes or self.spheres):
            raise ConfigurationError("La escena no tiene ninguna primitiva")

    @property
    def objects(self) -> list:
        """Primitivas apoyadas en el piso (candidatas a mirar)"""
        return list(self.boxes) + list(self.spheres)

    @property
    def solid_boxes(self) -> List[Box]:
        return list(self.walls) + list(self.boxes)


def room_walls(ancho: float, largo: float, alto: float, albedo=(0.8, 0.8, 0.75)) -> List[Box]:
    """Cuatro paredes delgadas por fuera del rectángulo [0, ancho] x [0, largo]"""
    e = WALL_THICKNESS
    return [
        Box((-e, -e, 0.0), (0.0, largo + e, alto), albedo),
        Box((ancho, -e, 0.0), (ancho + e, largo + e, alto), albedo),
        Box((-e, -e, 0.0), (ancho + e, 0.0, alto), albedo),
        Box((-e, largo, 0.0), (ancho + e, largo + e, alto), albedo),
    ]


def _albedo(rng: np.random.Generator) -> tuple:
    return tuple(float(c) for c in rng.uniform(0.2, 0.9, size=3))


def generate_scene(rng: np.random.Generator, cfg: Optional[RenderConfig] = None) -> Scene:
    """
    Genera una habitación con entre min_primitives y max_primitives sólidos apoyados en el piso

    Args:
        rng: Generador de números aleatorios
        cfg: Configuración de la escena

    Returns:
        Scene
    """
    cfg = cfg or RenderConfig()
    ancho, largo, alto = cfg.room_width, cfg.room_length, cfg.room_height
    margen = 0.3
    cantidad = int(rng.integers(cfg.min_primitives, max(cfg.min_primitives, cfg.max_primitives) + 1))

    cajas = []
    esferas = []
    for _ in range(cantidad):
        x = float(rng.uniform(margen, ancho - margen))
        y = float(rng.uniform(margen, largo - margen))
        if rng.random() < 0.5:
            medio = rng.uniform(0.1, 0.35, size=2)
            altura = float(rng.uniform(0.2, 1.0))
            cajas.append(Box((x - medio[0], y - medio[1], 0.0), (x + medio[0], y + medio[1], altura), _albedo(rng)))
        else:
            radio = float(rng.uniform(0.1, 0.3))
            esferas.append(Sphere((x, y, radio), radio, _albedo(rng)))

    logger.trace(f"Escena generada: {len(cajas)} cajas, {len(esferas)} esferas")
    return Scene(
        room=(ancho, largo, alto),
        floor=True,
        walls=room_walls(ancho, largo, alto),
        boxes=cajas,
        spheres=esferas,
        floor_albedo=_albedo(rng),
    )


def look_at(eye: Sequence[float], target: Sequence[float], up: Sequence[float] = (0.0, 0.0, 1.0)) -> np.ndarray:
    """
    Pose cámara -> mundo de una cámara en eye mirando a target

    Marco de cámara: x derecha, y abajo, z adelante.

    Returns:
        Matriz 4x4
    """
    eye = np.asarray(eye, dtype=np.float64)
    adelante = np.asarray(target, dtype=np.float64) - eye
    norma = np.linalg.norm(adelante)
    if norma == 0:
        raise ConfigurationError("look_at con eye == target")
    adelante /= norma
    up = np.asarray(up, dtype=np.float64)
    if np.linalg.norm(np.cross(adelante, up)) < 1e-9:
        up = np.array([0.0, 1.0, 0.0])
    derecha = np.cross(adelante, up)
    derecha /= np.linalg.norm(derecha)
    abajo = np.cross(adelante, derecha)

    pose = np.eye(4)
    pose[:3, 0] = derecha
    pose[:3, 1] = abajo
    pose[:3, 2] = adelante
    pose[:3, 3] = eye
    return pose


def sample_camera_pose(scene: Scene, rng: np.random.Generator) -> np.ndarray:
    """Cámara dentro de la habitación mirando a una primitiva (o al centro)"""
    ancho, largo, _ = scene.room
    margen = 0.2
    ojo = np.array([
        rng.uniform(margen, ancho - margen),
        rng.uniform(margen, largo - margen),
        rng.uniform(1.0, 2.0),
    ])
    objetos = scene.objects
    if objetos:
        elegido = objetos[int(rng.integers(0, len(objetos)))]
        objetivo = np.asarray(elegido.center, dtype=np.float64)
    else:
        objetivo = np.array([ancho / 2.0, largo / 2.0, 0.0])
    objetivo = objetivo + rng.normal(0.0, 0.1, size=3)
    if np.linalg.norm(objetivo - ojo) < 0.3:
        objetivo = np.array([ancho / 2.0, largo / 2.0, 0.0])
    return look_at(ojo, objetivo)
