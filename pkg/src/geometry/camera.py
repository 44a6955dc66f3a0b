"""
Conversiones pinhole entre mapas de profundidad, nubes de puntos y voxels
Cada conversión conserva la procedencia (anchors) de los elementos
"""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..errors import ConfigurationError, EmptyInputError
from .types import CameraIntrinsics, DepthMap, PointCloud, VoxelSet


@dataclass
class Projection:
    """Resultado de proyectar puntos: coordenadas de píxel, profundidad y máscara"""

    pixels: np.ndarray
    depth: np.ndarray
    in_bounds: np.ndarray


def _verificar_dimensiones(depth: DepthMap, K: CameraIntrinsics) -> None:
    if depth.width != K.width or depth.height != K.height:
        raise ConfigurationError(
            f"DepthMap {depth.width}x{depth.height} no coincide con intrínsecos {K.width}x{K.height}"
        )


def unproject_grid(depth: DepthMap, K: CameraIntrinsics) -> np.ndarray:
    """
    Eleva todos los píxeles a 3D

    Args:
        depth: Mapa de profundidad
        K: Intrínsecos de la cámara

    Returns:
        Arreglo HxWx3 con la coordenada de cada píxel (NaN en píxeles malos)
    """
    _verificar_dimensiones(depth, K)
    v, u = np.mgrid[0:depth.height, 0:depth.width].astype(np.float64)
    d = depth.values
    grid = np.stack([(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d], axis=-1)
    grid[~depth.valid] = np.nan
    return grid


def unproject(depth: DepthMap, K: CameraIntrinsics) -> PointCloud:
    """
    Convierte un mapa de profundidad en nube de puntos (orden row-major de píxeles válidos)

    Args:
        depth: Mapa de profundidad
        K: Intrínsecos de la cámara

    Returns:
        PointCloud con anchors = points y el píxel de origen de cada punto

    Raises:
        ConfigurationError: Si las dimensiones no coinciden con K
        EmptyInputError: Si no hay píxeles válidos
    """
    _verificar_dimensiones(depth, K)

    filas, columnas = np.nonzero(depth.valid)
    if len(filas) == 0:
        raise EmptyInputError("El mapa de profundidad no tiene píxeles válidos")

    d = depth.values[filas, columnas]
    puntos = np.stack(
        [(columnas - K.cx) * d / K.fx, (filas - K.cy) * d / K.fy, d],
        axis=1,
    )
    pixeles = np.stack([columnas, filas], axis=1)

    return PointCloud(points=puntos, anchors=puntos.copy(), pixels=pixeles)


def project(points, K: CameraIntrinsics) -> Projection:
    """
    Proyecta puntos 3D a la imagen

    Args:
        points: PointCloud o arreglo Nx3
        K: Intrínsecos de la cámara

    Returns:
        Projection con (u, v), profundidad y máscara dentro de la imagen.
        Los puntos con z <= 0 quedan marcados fuera de la imagen.
    """
    xyz = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = xyz[:, 2]
    delante = z > 0

    u = np.full(len(xyz), np.nan)
    v = np.full(len(xyz), np.nan)
    u[delante] = K.fx * xyz[delante, 0] / z[delante] + K.cx
    v[delante] = K.fy * xyz[delante, 1] / z[delante] + K.cy

    dentro = delante.copy()
    dentro[delante] = (
        (u[delante] >= -0.5) & (u[delante] < K.width - 0.5)
        & (v[delante] >= -0.5) & (v[delante] < K.height - 0.5)
    )

    return Projection(pixels=np.stack([u, v], axis=1), depth=z.copy(), in_bounds=dentro)


def voxelize(pc: PointCloud, voxel_size: float) -> VoxelSet:
    """
    Cuantiza una nube de puntos en voxels de tamaño fijo

    Args:
        pc: Nube de puntos (se cuantizan las coordenadas de points)
        voxel_size: Lado del voxel en metros

    Returns:
        VoxelSet con un voxel por índice ocupado (orden lexicográfico de índices);
        anchor y feature son la media de los puntos contenidos (feature constante 1 si no hay)

    Raises:
        ConfigurationError: Si voxel_size <= 0
        EmptyInputError: Si la nube está vacía
    """
    if not voxel_size > 0:
        raise ConfigurationError(f"voxel_size debe ser > 0, recibido {voxel_size}")
    if len(pc) == 0:
        raise EmptyInputError("No hay puntos para voxelizar")

    indices = np.floor(pc.points / voxel_size).astype(np.int64)
    ocupados, inversa, cuentas = np.unique(indices, axis=0, return_inverse=True, return_counts=True)
    inversa = inversa.reshape(-1)

    anchors = np.zeros((len(ocupados), 3))
    np.add.at(anchors, inversa, pc.anchors)
    anchors /= cuentas[:, None]

    if pc.features is not None:
        features = np.zeros((len(ocupados), pc.features.shape[1]))
        np.add.at(features, inversa, pc.features)
        features /= cuentas[:, None]
    else:
        features = np.ones((len(ocupados), 1))

    logger.debug(f"Voxelización: {len(pc)} puntos -> {len(ocupados)} voxels (tamaño {voxel_size} m)")

    return VoxelSet(voxel_size=voxel_size, indices=ocupados, features=features, anchors=anchors)


def transform_points(points: np.ndarray, pose: np.ndarray) -> np.ndarray:
    """Aplica una transformación rígida 4x4 a puntos Nx3"""
    pose = np.asarray(pose, dtype=np.float64)
    return np.asarray(points, dtype=np.float64) @ pose[:3, :3].T + pose[:3, 3]


def invert_pose(pose: np.ndarray) -> np.ndarray:
    """Inversa de una transformación rígida 4x4"""
    rotacion = pose[:3, :3]
    inversa = np.eye(4)
    inversa[:3, :3] = rotacion.T
    inversa[:3, 3] = -rotacion.T @ pose[:3, 3]
    return inversa


def overlap_fraction(
    depth_a: DepthMap,
    pose_a: np.ndarray,
    depth_b: DepthMap,
    pose_b: np.ndarray,
    K: CameraIntrinsics,
    tolerancia: float = 0.05,
) -> float:
    """
    Fracción de píxeles válidos de A visibles en B

    Cada píxel válido de A se lleva al mundo con pose_a, se reproyecta en B y
    cuenta como visible si cae dentro de la imagen sobre un píxel válido cuya
    profundidad coincide (error relativo <= tolerancia, mínimo 2 cm).

    Returns:
        Fracción en [0, 1]; 0 si A no tiene píxeles válidos
    """
    if depth_a.valid_count == 0:
        return 0.0
    nube = unproject(depth_a, K)
    en_b = transform_points(transform_points(nube.points, pose_a), invert_pose(pose_b))
    proy = project(en_b, K)

    visibles = np.zeros(len(en_b), dtype=bool)
    idx = np.flatnonzero(proy.in_bounds)
    if len(idx):
        u = np.rint(proy.pixels[idx, 0]).astype(np.int64)
        v = np.rint(proy.pixels[idx, 1]).astype(np.int64)
        z_b = depth_b.values[v, u]
        coincide = depth_b.valid[v, u] & (np.abs(z_b - proy.depth[idx]) <= np.maximum(tolerancia * z_b, 0.02))
        visibles[idx] = coincide
    return float(visibles.mean())
