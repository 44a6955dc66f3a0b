"""
Synthdata - Escenas procedurales renderizadas a frames RGB-D con pose
"""
from .scene import Box, Sphere, Scene, generate_scene, look_at, room_walls, sample_camera_pose
from .renderer import BadPixelModel, PosedFrame, camera_rays, render, render_pair
from .frames import DirectoryFrames, SyntheticFrames, frame_stem, write_frames

__all__ = [
    # Escenas
    'Box',
    'Sphere',
    'Scene',
    'generate_scene',
    'look_at',
    'room_walls',
    'sample_camera_pose',

    # Render
    'BadPixelModel',
    'PosedFrame',
    'camera_rays',
    'render',
    'render_pair',

    # Fuentes de frames
    'SyntheticFrames',
    'DirectoryFrames',
    'frame_stem',
    'write_frames'
]
