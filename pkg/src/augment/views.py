"""
Construcción de vistas aumentadas (Depth, Point, Voxel, Image)

Cada elemento de una vista conserva su anchor: la coordenada 3D original
en el marco de la cámara sin recortar. Las aumentaciones modifican el
payload, nunca los anchors, así los pares positivos se obtienen sin
extrínsecos.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import ndimage

from ..errors import ConfigurationError, EmptyInputError, PairRejectedError
from ..geometry import (
    CameraIntrinsics,
    ColorImage,
    DepthMap,
    PointCloud,
    ViewFormat,
    VoxelSet,
    overlap_fraction,
    transform_points,
    unproject,
    unproject_grid,
    voxelize,
)
from .crops import CropSpec
from .params import AugmentParams

Payload = Union[DepthMap, PointCloud, VoxelSet, ColorImage]

# Pesos de luminancia para escala de grises
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class View:
    """
    Vista aumentada de un recorte

    Args:
        format: Formato del payload
        payload: DepthMap | PointCloud | VoxelSet | ColorImage
        anchors: Coordenada 3D original de cada elemento (píxeles válidos en orden row-major para grillas)
        intrinsics: Intrínsecos del recorte (Depth/Image)
        anchor_grid: HxWx3 con el anchor de cada píxel, NaN en inválidos (Depth/Image)
        source_pixels: Píxel (u, v) de origen en la imagen sin recortar (Depth/Point/Image)
    """

    format: ViewFormat
    payload: Payload
    anchors: np.ndarray
    intrinsics: Optional[CameraIntrinsics] = None
    anchor_grid: Optional[np.ndarray] = None
    source_pixels: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.anchors)

    @property
    def valid_mask(self) -> Optional[np.ndarray]:
        """Máscara HxW de píxeles con anchor (sólo formatos de grilla)"""
        if self.anchor_grid is None:
            return None
        return ~np.isnan(self.anchor_grid[..., 0])


def _recortar(depth: DepthMap, K: CameraIntrinsics, crop: CropSpec) -> Tuple[DepthMap, CameraIntrinsics]:
    """Recorta el mapa, desplaza el punto principal y aplica el dropout"""
    crop.check_inside(depth.width, depth.height)
    valores = depth.values[crop.y0:crop.y0 + crop.h, crop.x0:crop.x0 + crop.w].copy()
    validos = depth.valid[crop.y0:crop.y0 + crop.h, crop.x0:crop.x0 + crop.w].copy()
    validos &= ~crop.dropout_mask()
    return DepthMap(valores, validos), K.cropped(crop.x0, crop.y0, crop.w, crop.h)


def _pixeles_origen(mascara: np.ndarray, crop: CropSpec) -> np.ndarray:
    filas, columnas = np.nonzero(mascara)
    return np.stack([columnas + crop.x0, filas + crop.y0], axis=1)


def _transformar_coordenadas(puntos: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Rotación alrededor del eje y de la cámara, escala y reflexiones"""
    salida = puntos
    if params.rotation_angle != 0.0:
        c, s = np.cos(params.rotation_angle), np.sin(params.rotation_angle)
        rot_y = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        salida = salida @ rot_y.T
    if params.scale != 1.0:
        salida = salida * params.scale
    if params.flip_x or params.flip_z:
        salida = salida.copy()
        if params.flip_x:
            salida[:, 0] = -salida[:, 0]
        if params.flip_z:
            salida[:, 2] = -salida[:, 2]
    return salida


def _girar_grilla(depth: DepthMap, grid: np.ndarray, K: CameraIntrinsics, angulo: float):
    """Gira profundidad y anchors alrededor del punto principal (vecino más cercano)"""
    if angulo == 0.0:
        return depth.values.copy(), depth.valid.copy(), grid.copy()
    alto, ancho = depth.height, depth.width
    v, u = np.mgrid[0:alto, 0:ancho].astype(np.float64)
    c, s = np.cos(angulo), np.sin(angulo)
    du, dv = u - K.cx, v - K.cy
    # cada píxel de salida toma el valor del píxel de origen rotado en -angulo
    u_src = np.rint(c * du + s * dv + K.cx).astype(np.int64)
    v_src = np.rint(-s * du + c * dv + K.cy).astype(np.int64)
    dentro = (u_src >= 0) & (u_src < ancho) & (v_src >= 0) & (v_src < alto)
    u_src = np.where(dentro, u_src, 0)
    v_src = np.where(dentro, v_src, 0)

    validos = dentro & depth.valid[v_src, u_src]
    valores = np.where(validos, depth.values[v_src, u_src], 0.0)
    anchors = grid[v_src, u_src]
    anchors[~validos] = np.nan
    return valores, validos, anchors


def _poner_en_cero(validos: np.ndarray, fraccion: float, semilla: int) -> np.ndarray:
    """Elige round(fraccion * |válidos|) píxeles válidos uniformemente y los invalida"""
    indices = np.flatnonzero(validos)
    cantidad = int(round(fraccion * len(indices)))
    if cantidad == 0:
        return validos
    elegidos = np.random.default_rng(semilla).choice(indices, size=cantidad, replace=False)
    salida = validos.copy().reshape(-1)
    salida[elegidos] = False
    return salida.reshape(validos.shape)


def make_view(
    depth: DepthMap,
    K: CameraIntrinsics,
    crop: CropSpec,
    format: ViewFormat,
    params: AugmentParams,
    voxel_size: Optional[float] = None,
) -> View:
    """
    Construye una vista Depth, Point o Voxel de un recorte

    Args:
        depth: Mapa de profundidad de origen
        K: Intrínsecos de la cámara de origen
        crop: Recorte con dropout opcional
        format: Formato de la vista
        params: Parámetros de aumentación
        voxel_size: Tamaño de voxel (obligatorio para Voxel)

    Returns:
        View con anchors en el marco de la cámara sin recortar

    Raises:
        ConfigurationError: Formato Image (usar make_image_view) o voxel_size faltante
        EmptyInputError: Si la vista queda vacía tras dropout/puesta en cero
    """
    format = ViewFormat(format)
    if format is ViewFormat.IMAGE:
        raise ConfigurationError("Las vistas Image se construyen con make_image_view")
    if depth.width != K.width or depth.height != K.height:
        raise ConfigurationError(
            f"DepthMap {depth.width}x{depth.height} no coincide con intrínsecos {K.width}x{K.height}"
        )

    recorte, Kc = _recortar(depth, K, crop)

    if format is ViewFormat.DEPTH:
        grid = unproject_grid(recorte, Kc)
        valores, validos, anchor_grid = _girar_grilla(recorte, grid, Kc, params.depth_roll_angle)
        validos = _poner_en_cero(validos, params.pixel_zero_fraction, params.seed)
        if not validos.any():
            raise EmptyInputError("Vista Depth vacía tras dropout y puesta en cero")
        anchor_grid[~validos] = np.nan
        payload = DepthMap(valores, validos)
        return View(
            format=format,
            payload=payload,
            anchors=anchor_grid[validos],
            intrinsics=Kc,
            anchor_grid=anchor_grid,
            source_pixels=_fuentes_giradas(anchor_grid, validos, K),
        )

    if recorte.valid_count == 0:
        raise EmptyInputError("Recorte sin píxeles válidos tras el dropout")
    nube = unproject(recorte, Kc)
    anchors = nube.points
    puntos = _transformar_coordenadas(anchors, params)
    pixeles = nube.pixels + np.array([crop.x0, crop.y0])

    if format is ViewFormat.POINT:
        payload = PointCloud(points=puntos, anchors=anchors, pixels=pixeles)
        return View(format=format, payload=payload, anchors=payload.anchors, source_pixels=pixeles)

    if voxel_size is None:
        raise ConfigurationError("voxel_size es obligatorio para vistas Voxel")
    voxels = voxelize(PointCloud(points=puntos, anchors=anchors), voxel_size)
    return View(format=format, payload=voxels, anchors=voxels.anchors)


def _fuentes_giradas(anchor_grid: np.ndarray, validos: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    """Píxel de origen de cada anchor de una grilla, recuperado por proyección"""
    anchors = anchor_grid[validos]
    u = np.rint(K.fx * anchors[:, 0] / anchors[:, 2] + K.cx).astype(np.int64)
    v = np.rint(K.fy * anchors[:, 1] / anchors[:, 2] + K.cy).astype(np.int64)
    return np.stack([u, v], axis=1)


def _jitter_color(rgb: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Brillo, contraste, saturación, escala de grises y desenfoque"""
    salida = rgb
    if params.brightness != 1.0:
        salida = np.clip(salida * params.brightness, 0.0, 1.0)
    if params.color_contrast != 1.0:
        media = float((salida @ _LUMA).mean())
        salida = np.clip((salida - media) * params.color_contrast + media, 0.0, 1.0)
    if params.saturation != 1.0:
        gris = (salida @ _LUMA)[..., None]
        salida = np.clip((salida - gris) * params.saturation + gris, 0.0, 1.0)
    if params.grayscale:
        salida = np.repeat((salida @ _LUMA)[..., None], 3, axis=2)
    if params.blur_sigma > 0:
        salida = ndimage.gaussian_filter(salida, sigma=(params.blur_sigma, params.blur_sigma, 0.0))
    return salida


def make_image_view(
    rgb: ColorImage,
    depth: DepthMap,
    K: CameraIntrinsics,
    crop: CropSpec,
    params: AugmentParams,
) -> View:
    """
    Construye una vista Image: color recortado y aumentado, anchors de la profundidad alineada

    Args:
        rgb: Imagen de color alineada con depth
        depth: Mapa de profundidad de origen
        K: Intrínsecos de la cámara de origen
        crop: Recorte con dropout opcional
        params: Parámetros de aumentación (sólo se usan los fotométricos)

    Returns:
        View de formato Image

    Raises:
        ConfigurationError: Si color y profundidad no están alineados
        EmptyInputError: Si el recorte no tiene píxeles con profundidad válida
    """
    if (rgb.height, rgb.width) != (depth.height, depth.width):
        raise ConfigurationError(
            f"Imagen {rgb.width}x{rgb.height} no alineada con profundidad {depth.width}x{depth.height}"
        )
    if depth.width != K.width or depth.height != K.height:
        raise ConfigurationError("Intrínsecos no coinciden con la imagen")

    recorte, Kc = _recortar(depth, K, crop)
    if recorte.valid_count == 0:
        raise EmptyInputError("Vista Image sin píxeles con profundidad válida")

    color = rgb.rgb[crop.y0:crop.y0 + crop.h, crop.x0:crop.x0 + crop.w].copy()
    color[crop.dropout_mask()] = 0.0
    color = _jitter_color(color, params)

    anchor_grid = unproject_grid(recorte, Kc)
    return View(
        format=ViewFormat.IMAGE,
        payload=ColorImage(color),
        anchors=anchor_grid[recorte.valid],
        intrinsics=Kc,
        anchor_grid=anchor_grid,
        source_pixels=_pixeles_origen(recorte.valid, crop),
    )


def cross_view_pair(
    depth_a: DepthMap,
    pose_a: np.ndarray,
    depth_b: DepthMap,
    pose_b: np.ndarray,
    K: CameraIntrinsics,
    min_overlap: float = 0.3,
    params_a: Optional[AugmentParams] = None,
    params_b: Optional[AugmentParams] = None,
) -> Tuple[View, View]:
    """
    Par de vistas Point de dos frames con pose, con anchors en el marco mundo

    Args:
        depth_a, depth_b: Mapas de profundidad
        pose_a, pose_b: Transformaciones rígidas cámara -> mundo
        K: Intrínsecos compartidos
        min_overlap: Solapamiento mínimo (fracción de píxeles válidos visibles en el otro frame)
        params_a, params_b: Aumentación de coordenadas de cada vista (identidad por defecto)

    Returns:
        (vista_a, vista_b)

    Raises:
        PairRejectedError: Si el solapamiento es menor que min_overlap
    """
    solapamiento = min(
        overlap_fraction(depth_a, pose_a, depth_b, pose_b, K),
        overlap_fraction(depth_b, pose_b, depth_a, pose_a, K),
    )
    if solapamiento < min_overlap:
        raise PairRejectedError(solapamiento, min_overlap)

    vistas = []
    for depth, pose, params in ((depth_a, pose_a, params_a), (depth_b, pose_b, params_b)):
        nube = unproject(depth, K)
        mundo = transform_points(nube.points, pose)
        puntos = _transformar_coordenadas(nube.points, params or AugmentParams.identity())
        payload = PointCloud(points=puntos, anchors=mundo, pixels=nube.pixels)
        vistas.append(View(format=ViewFormat.POINT, payload=payload, anchors=payload.anchors, source_pixels=nube.pixels))

    logger.debug(f"Par con pose aceptado: solapamiento {solapamiento:.2f}")
    return vistas[0], vistas[1]
