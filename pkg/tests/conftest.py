"""
Fixtures compartidas: cámaras chicas, frames planos deterministas y configuraciones mínimas
"""
import numpy as np
import pytest

from src.config import ContrastConfig, EncoderConfig, RenderConfig, StrategyConfig, TrainConfig
from src.geometry import CameraIntrinsics, ColorImage, DepthMap
from src.synthdata import PosedFrame


def camara(tamano: int = 32, fov_deg: float = 60.0) -> CameraIntrinsics:
    """Cámara cuadrada con el punto principal sobre el píxel central"""
    fx = (tamano / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
    centro = (tamano - 1) / 2.0
    return CameraIntrinsics(fx, fx, centro, centro, tamano, tamano)


def frame_plano(tamano: int = 32, index: int = 0, inclinacion: float = 0.5) -> PosedFrame:
    """Plano inclinado entre ~1.5 m y ~2.5 m, todos los píxeles válidos, pose identidad"""
    K = camara(tamano)
    v, u = np.mgrid[0:tamano, 0:tamano]
    depth = DepthMap(1.5 + (u + inclinacion * v) / (1.5 * tamano))
    rng = np.random.default_rng(index)
    color = ColorImage(rng.uniform(size=(tamano, tamano, 3)))
    return PosedFrame(depth=depth, color=color, intrinsics=K, pose=np.eye(4), index=index)


def encoder_chico() -> EncoderConfig:
    return EncoderConfig(
        widths=(2, 3, 4),
        feature_dim=4,
        head_hidden=4,
        head_out=4,
        depth_input_size=32,
        max_points=256,
        point_k1=8,
        point_k2=4,
        voxel_size=0.3,
        voxel_grid_limit=32,
    )


def config_chica(salida, kind: str = "dpco", **extra) -> TrainConfig:
    """Ejecución mínima: 4 frames de 32x32, una época, lotes de 2"""
    valores = dict(
        epochs=1,
        batch_size=2,
        frames=4,
        holdout_frames=0,
        seed=7,
        output_dir=str(salida),
        strategy=StrategyConfig(kind=kind),
        contrast=ContrastConfig(bank_size=8, match_radius=0.5, max_pairs=64),
        encoder=encoder_chico(),
        render=RenderConfig(width=32, height=32),
    )
    valores.update(extra)
    return TrainConfig(**valores)


@pytest.fixture
def K32() -> CameraIntrinsics:
    return camara(32)


@pytest.fixture
def plano() -> PosedFrame:
    return frame_plano()


@pytest.fixture
def frames_planos():
    return [frame_plano(index=i, inclinacion=0.3 + 0.1 * i) for i in range(4)]


@pytest.fixture
def cfg_chica(tmp_path) -> TrainConfig:
    return config_chica(tmp_path / "run")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
