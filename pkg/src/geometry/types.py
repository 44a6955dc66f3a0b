"""
Tipos de datos geométricos de Contrasta3D
Mapas de profundidad, nubes de puntos, voxels e imágenes de color,
todos con la procedencia 3D (anchors) de cada elemento
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..errors import ConfigurationError


class ViewFormat(str, Enum):
    DEPTH = "depth"
    POINT = "point"
    VOXEL = "voxel"
    IMAGE = "image"


@dataclass(frozen=True)
class CameraIntrinsics:
    """
    Parámetros intrínsecos de una cámara pinhole

    Convención: el píxel entero (u, v) es la muestra del modelo pinhole,
    sin desplazamiento de medio píxel. Marco de cámara: x derecha, y abajo, z adelante.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigurationError(f"Focales inválidas: fx={self.fx}, fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise ConfigurationError(f"Tamaño de imagen inválido: {self.width}x{self.height}")
        if not (np.isfinite(self.cx) and np.isfinite(self.cy)):
            raise ConfigurationError("Punto principal no finito")

    def validate(self) -> "CameraIntrinsics":
        """Verifica que el punto principal esté dentro de la imagen (cámaras de origen)"""
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigurationError(
                f"Punto principal ({self.cx}, {self.cy}) fuera de la imagen {self.width}x{self.height}"
            )
        return self

    def cropped(self, x0: int, y0: int, w: int, h: int) -> "CameraIntrinsics":
        """Intrínsecos de un recorte: el punto principal se desplaza (-x0, -y0)"""
        return CameraIntrinsics(self.fx, self.fy, self.cx - x0, self.cy - y0, w, h)

    def scaled(self, escala: float, width: int, height: int) -> "CameraIntrinsics":
        """Intrínsecos tras reescalar la imagen por un factor uniforme"""
        return CameraIntrinsics(self.fx * escala, self.fy * escala, self.cx * escala, self.cy * escala, width, height)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_fov(cls, width: int, height: int, fov_deg: float) -> "CameraIntrinsics":
        """Cámara con campo de visión horizontal dado y punto principal centrado"""
        fx = (width / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
        return cls(fx, fx, width / 2.0, height / 2.0, width, height)


@dataclass
class DepthMap:
    """Profundidad por píxel en metros; 0 marca un píxel malo"""

    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ConfigurationError(f"DepthMap debe ser 2D, recibido {self.values.shape}")
        finitos = np.isfinite(self.values)
        self.values = np.where(finitos, self.values, 0.0)
        if self.valid is None:
            self.valid = self.values > 0
        else:
            self.valid = np.asarray(self.valid, dtype=bool) & (self.values > 0)
        self.values = np.where(self.valid, self.values, 0.0)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())


@dataclass
class PointCloud:
    """
    Nube de puntos en el marco de cámara

    anchors guarda la coordenada 3D original de cada punto y nunca se
    transforma con las aumentaciones. pixels (opcional) guarda el píxel de
    origen (u, v) en la imagen sin recortar.
    """

    points: np.ndarray
    anchors: np.ndarray = None
    features: Optional[np.ndarray] = None
    pixels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.anchors is None:
            self.anchors = self.points.copy()
        self.anchors = np.asarray(self.anchors, dtype=np.float64).reshape(-1, 3)
        if len(self.anchors) != len(self.points):
            raise ConfigurationError(f"|anchors|={len(self.anchors)} distinto de |points|={len(self.points)}")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64)
            if self.features.ndim == 1:
                self.features = self.features[:, None]
            if len(self.features) != len(self.points):
                raise ConfigurationError(f"|features|={len(self.features)} distinto de |points|={len(self.points)}")
        if self.pixels is not None:
            self.pixels = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class VoxelSet:
    """Voxels ocupados con índice entero, feature y anchor representativo"""

    voxel_size: float
    indices: np.ndarray
    features: np.ndarray
    anchors: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, 3)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.anchors = np.asarray(self.anchors, dtype=np.float64).reshape(-1, 3)
        if not (len(self.indices) == len(self.features) == len(self.anchors)):
            raise ConfigurationError("VoxelSet con longitudes inconsistentes")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class ColorImage:
    """Imagen RGB con canales en [0, 1]"""

    rgb: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rgb = np.clip(np.asarray(self.rgb, dtype=np.float64), 0.0, 1.0)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ConfigurationError(f"ColorImage debe ser HxWx3, recibido {self.rgb.shape}")

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]
