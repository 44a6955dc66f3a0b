"""
Geometry - Conversiones pinhole entre profundidad, puntos y voxels
"""
from .types import ViewFormat, CameraIntrinsics, DepthMap, PointCloud, VoxelSet, ColorImage
from .camera import (
    Projection,
    unproject,
    unproject_grid,
    project,
    voxelize,
    transform_points,
    invert_pose,
    overlap_fraction
)
from .io import (
    read_depth_pgm,
    write_depth_pgm,
    read_color_ppm,
    write_color_ppm,
    read_intrinsics,
    write_intrinsics,
    read_pose,
    write_pose
)

__all__ = [
    # Tipos
    "ViewFormat",
    "CameraIntrinsics",
    "DepthMap",
    "PointCloud",
    "VoxelSet",
    "ColorImage",
    # Conversiones
    "Projection",
    "unproject",
    "unproject_grid",
    "project",
    "voxelize",
    "transform_points",
    "invert_pose",
    "overlap_fraction",
    # Archivos
    "read_depth_pgm",
    "write_depth_pgm",
    "read_color_ppm",
    "write_color_ppm",
    "read_intrinsics",
    "write_intrinsics",
    "read_pose",
    "write_pose"
]
