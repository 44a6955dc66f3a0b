"""
Configuración global de Contrasta3D
Carga variables de entorno, define los modelos de configuración de una
ejecución y los presets (escritorio / escala completa)
"""
import math
import os
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple, Type, TypeVar

from dotenv import dotenv_values, load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError
from .geometry.types import ViewFormat

# Cargar variables de entorno
load_dotenv()

# === PATHS DEL PROYECTO ===
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
LOGS_DIR = BASE_DIR / "logs"
RUNS_DIR = BASE_DIR / "runs"

# === ENTORNO ===
LOG_LEVEL = os.getenv("CONTRASTA_LOG_LEVEL", "INFO")
DATABASE_URL = os.getenv("CONTRASTA_DATABASE_URL")  # None -> sqlite dentro del directorio de la ejecución
WORKERS = int(os.getenv("CONTRASTA_WORKERS", "0"))


class StrategyKind(str, Enum):
    DPCO = "dpco"
    DVCO = "dvco"
    PVCO = "pvco"
    PPCO = "ppco"
    IPCO = "ipco"
    POINTCONTRAST = "pointcontrast"
    DDCO = "ddco"


# Par de formatos (α, β) de cada estrategia
STRATEGY_FORMATS: Dict[StrategyKind, Tuple[ViewFormat, ViewFormat]] = {
    StrategyKind.DPCO: (ViewFormat.DEPTH, ViewFormat.POINT),
    StrategyKind.DVCO: (ViewFormat.DEPTH, ViewFormat.VOXEL),
    StrategyKind.PVCO: (ViewFormat.POINT, ViewFormat.VOXEL),
    StrategyKind.PPCO: (ViewFormat.POINT, ViewFormat.POINT),
    StrategyKind.IPCO: (ViewFormat.IMAGE, ViewFormat.POINT),
    StrategyKind.POINTCONTRAST: (ViewFormat.POINT, ViewFormat.POINT),
    StrategyKind.DDCO: (ViewFormat.DEPTH, ViewFormat.DEPTH),
}


class _FlatModel(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class AugmentSettings(_FlatModel):
    """Rangos de muestreo de las aumentaciones"""

    crop_min: float = Field(0.5, gt=0, le=1)
    crop_max: float = Field(1.0, gt=0, le=1)
    min_crop_px: int = Field(16, ge=1)
    use_dropout: bool = True
    dropout_min: float = Field(0.1, ge=0, le=1)
    dropout_max: float = Field(0.3, ge=0, le=1)
    rotate_points: bool = True
    scale_min: float = Field(0.8, gt=0)
    scale_max: float = Field(1.2, gt=0)
    flip_prob: float = Field(0.5, ge=0, le=1)
    depth_roll_max: float = Field(math.pi / 6, ge=0)
    pixel_zero_fraction: float = Field(0.2, ge=0, le=1)
    brightness: float = Field(0.4, ge=0)
    color_contrast: float = Field(0.4, ge=0)
    saturation: float = Field(0.4, ge=0)
    grayscale_prob: float = Field(0.2, ge=0, le=1)
    blur_prob: float = Field(0.5, ge=0, le=1)
    blur_sigma_max: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _rangos(self):
        if self.crop_min > self.crop_max:
            raise ValueError("crop_min debe ser <= crop_max")
        if self.dropout_min > self.dropout_max:
            raise ValueError("dropout_min debe ser <= dropout_max")
        if self.scale_min > self.scale_max:
            raise ValueError("scale_min debe ser <= scale_max")
        return self


class ContrastConfig(_FlatModel):
    """Parámetros de las pérdidas contrastivas y del memory bank"""

    tau: float = Field(0.07, gt=0)
    bank_size: int = Field(2 ** 12, ge=1)
    bank_init: str = "random"
    ema_momentum: float = Field(0.999, ge=0, le=1)
    match_radius: float = Field(0.10, gt=0)
    max_pairs: int = Field(512, ge=2)
    min_overlap: float = Field(0.3, ge=0, le=1)

    @field_validator("bank_init")
    @classmethod
    def _bank_init(cls, valor: str) -> str:
        if valor not in ("random", "empty"):
            raise ValueError("bank_init debe ser 'random' o 'empty'")
        return valor


class EncoderConfig(_FlatModel):
    """Hiperparámetros de arquitectura de los encoders de juguete"""

    widths: Tuple[int, int, int] = (16, 32, 64)
    feature_dim: int = Field(32, ge=1)
    head_hidden: int = Field(64, ge=1)
    head_out: int = Field(32, ge=1)
    depth_input_size: int = Field(64, ge=8)
    max_points: int = Field(2048, ge=32)
    point_k1: int = Field(16, ge=1)
    point_k2: int = Field(8, ge=1)
    point_radius1: float = Field(0.25, gt=0)
    point_radius2: float = Field(0.5, gt=0)
    voxel_size: float = Field(0.15, gt=0)
    voxel_grid_limit: int = Field(32, ge=4)

    @field_validator("widths", mode="before")
    @classmethod
    def _widths(cls, valor):
        if isinstance(valor, str):
            valor = tuple(int(v) for v in valor.split(",") if v.strip())
        return valor

    @field_validator("depth_input_size")
    @classmethod
    def _multiplo_de_8(cls, valor: int) -> int:
        if valor % 8:
            raise ValueError("depth_input_size debe ser múltiplo de 8")
        return valor


class RenderConfig(_FlatModel):
    """Cámara y escena del generador sintético"""

    width: int = Field(64, ge=8)
    height: int = Field(64, ge=8)
    fov_deg: float = Field(60.0, gt=0, lt=180)
    room_width: float = Field(3.0, gt=0)
    room_length: float = Field(3.0, gt=0)
    room_height: float = Field(2.4, gt=0)
    min_primitives: int = Field(3, ge=1)
    max_primitives: int = Field(6, ge=1)
    baseline: float = Field(0.3, ge=0)
    max_rotation_deg: float = Field(30.0, ge=0)
    grazing_threshold: float = Field(0.1, ge=0)
    edge_jump: float = Field(0.10, gt=0)
    edge_band_px: int = Field(2, ge=0)


class StrategyConfig(_FlatModel):
    """Qué variante del framework se entrena y con qué términos de pérdida"""

    kind: StrategyKind = StrategyKind.DPCO
    use_local: bool = True
    use_global: bool = True

    @field_validator("kind", mode="before")
    @classmethod
    def _kind(cls, valor):
        if isinstance(valor, str):
            try:
                return StrategyKind(valor.strip().lower())
            except ValueError:
                raise ValueError(f"estrategia desconocida: {valor}")
        return valor

    @model_validator(mode="after")
    def _terminos(self):
        if self.kind is StrategyKind.POINTCONTRAST and self.use_global:
            # PointContrast sólo usa correspondencia local
            object.__setattr__(self, "use_global", False)
        if not (self.use_local or self.use_global):
            raise ValueError("use_local y use_global desactivados: no hay nada que optimizar")
        return self

    @property
    def format_alpha(self) -> ViewFormat:
        return STRATEGY_FORMATS[self.kind][0]

    @property
    def format_beta(self) -> ViewFormat:
        return STRATEGY_FORMATS[self.kind][1]

    @property
    def shares_weights(self) -> bool:
        return self.format_alpha is self.format_beta

    @property
    def world_anchors(self) -> bool:
        return self.kind is StrategyKind.POINTCONTRAST


_SECCIONES = ("strategy", "contrast", "encoder", "augment", "render")


class TrainConfig(_FlatModel):
    """Configuración completa de una ejecución de pre-entrenamiento"""

    lr0: float = Field(0.03, gt=0)
    sgd_momentum: float = Field(0.9, ge=0, lt=1)
    epochs: int = Field(20, ge=0)
    batch_size: int = Field(8, ge=1)
    frames: int = Field(200, ge=1)
    holdout_frames: int = Field(32, ge=0)
    seed: int = 0
    workers: int = Field(0, ge=0)
    output_dir: str = "runs/desk"
    strategy: StrategyConfig = Field(default_factory=StrategyConfig)
    contrast: ContrastConfig = Field(default_factory=ContrastConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    augment: AugmentSettings = Field(default_factory=AugmentSettings)
    render: RenderConfig = Field(default_factory=RenderConfig)

    @classmethod
    def from_flat(cls, valores: Dict[str, Optional[str]]) -> "TrainConfig":
        """
        Construye la configuración a partir de pares clave=valor planos

        Args:
            valores: Diccionario clave -> valor (texto) tal como sale de dotenv_values

        Returns:
            TrainConfig validada
        """
        propios = {}
        secciones: Dict[str, Dict[str, str]] = {nombre: {} for nombre in _SECCIONES}
        campos_seccion = {
            nombre: set(cls.model_fields[nombre].annotation.model_fields)
            for nombre in _SECCIONES
        }

        for clave, valor in valores.items():
            clave = clave.strip().lower()
            if valor is None:
                continue
            if clave == "strategy":
                secciones["strategy"]["kind"] = valor
                continue
            destino = next((n for n, campos in campos_seccion.items() if clave in campos), None)
            if destino is not None:
                secciones[destino][clave] = valor
            elif clave in cls.model_fields and clave not in _SECCIONES:
                propios[clave] = valor
            else:
                raise ConfigurationError(f"Clave de configuración desconocida: '{clave}'")

        return build_config(cls, **propios, **secciones)

    def to_flat(self) -> Dict[str, str]:
        """Serializa a pares clave=valor planos (orden determinista)"""
        plano: Dict[str, str] = {}
        for nombre, valor in self.model_dump(mode="json").items():
            if nombre in _SECCIONES:
                for clave, sub in valor.items():
                    if nombre == "strategy" and clave == "kind":
                        plano["strategy"] = str(sub)
                    elif isinstance(sub, (list, tuple)):
                        plano[clave] = ",".join(str(v) for v in sub)
                    else:
                        plano[clave] = str(sub)
            else:
                plano[nombre] = str(valor)
        return plano


# === PRESETS ===
DESK_PRESET: Dict[str, str] = {}

FULL_PRESET: Dict[str, str] = {
    "epochs": "120",
    "batch_size": "32",
    "frames": "78000",
    "bank_size": str(2 ** 15),
    "match_radius": "0.025",
    "voxel_size": "0.025",
    "voxel_grid_limit": "512",
    "depth_input_size": "352",
    "max_points": "20000",
    "feature_dim": "128",
    "head_hidden": "512",
    "head_out": "128",
}

PRESETS = {"desk": DESK_PRESET, "full": FULL_PRESET}

M = TypeVar("M", bound=BaseModel)


def build_config(modelo: Type[M], **valores) -> M:
    """
    Instancia un modelo de configuración traduciendo errores de pydantic

    Args:
        modelo: Clase pydantic a instanciar
        **valores: Campos del modelo

    Returns:
        Instancia validada

    Raises:
        ConfigurationError: Si la validación falla
    """
    try:
        return modelo(**valores)
    except ValidationError as e:
        errores = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigurationError(f"Configuración inválida ({modelo.__name__}): {errores}") from e


def load_run_config(ruta: Optional[str] = None, preset: str = "desk", **overrides) -> TrainConfig:
    """
    Carga la configuración de una ejecución desde un archivo clave=valor

    Args:
        ruta: Archivo de configuración (opcional)
        preset: Nombre del preset base ('desk' o 'full')
        **overrides: Valores que pisan al archivo (ej: desde la CLI)

    Returns:
        TrainConfig validada
    """
    if preset not in PRESETS:
        raise ConfigurationError(f"Preset desconocido: {preset}")

    valores: Dict[str, Optional[str]] = dict(PRESETS[preset])

    if ruta is not None:
        if not Path(ruta).exists():
            raise ConfigurationError(f"Archivo de configuración no encontrado: {ruta}")
        valores.update(dotenv_values(ruta))
        logger.debug(f"Configuración leída de {ruta}")

    for clave, valor in overrides.items():
        if valor is not None:
            valores[clave] = str(valor)

    return TrainConfig.from_flat(valores)


def save_run_config(config: TrainConfig, ruta: Path) -> None:
    """Guarda la configuración resuelta como clave=valor (metadata de la ejecución)"""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    lineas = [f"{clave}={valor}" for clave, valor in config.to_flat().items()]
    ruta.write_text("\n".join(lineas) + "\n", encoding="utf-8")
