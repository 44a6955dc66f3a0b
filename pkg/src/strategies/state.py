"""
Armado del estado dual de encoders para cada estrategia y su (de)serialización
"""
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from ..config import TrainConfig
from ..contrast import Branch, DualEncoderState, MemoryBank
from ..encoders import EncoderSpec, init_head
from ..errors import ConfigurationError
from ..geometry import ViewFormat
from .plan import ViewPlan

BANK_ALPHA = "bank.alpha"
BANK_BETA = "bank.beta"


def _rama(formato: ViewFormat, cfg: TrainConfig, rng: np.random.Generator, registry) -> Branch:
    if formato not in registry:
        raise ConfigurationError(f"No hay encoder registrado para el formato '{formato.value}'")
    encoder = registry[formato].init(cfg.encoder, rng)
    return Branch(encoder=encoder, head=init_head(cfg.encoder, rng))


def build_strategy(
    cfg: TrainConfig,
    rng: np.random.Generator,
    registry: Optional[Dict[ViewFormat, EncoderSpec]] = None,
) -> Tuple[DualEncoderState, ViewPlan]:
    """
    Inicializa encoders, espejos momentum y memory banks de una estrategia

    Args:
        cfg: Configuración de la ejecución
        rng: Generador para la inicialización de pesos y bancos
        registry: Encoders por formato (por defecto el registro global)

    Returns:
        (estado, plan de vistas)

    Raises:
        ConfigurationError: Si falta un encoder para alguno de los formatos
    """
    plan = ViewPlan.from_config(cfg, registry)
    estrategia = cfg.strategy

    alpha = _rama(plan.format_alpha, cfg, rng, plan.registry)
    if estrategia.shares_weights:
        beta = alpha
    else:
        beta = _rama(plan.format_beta, cfg, rng, plan.registry)
    alpha_m = alpha.mirror()
    beta_m = alpha_m if beta is alpha else beta.mirror()

    bank_alpha = bank_beta = None
    if estrategia.use_global:
        bank_alpha = MemoryBank(cfg.contrast.bank_size, cfg.encoder.head_out)
        bank_beta = MemoryBank(cfg.contrast.bank_size, cfg.encoder.head_out)
        if cfg.contrast.bank_init == "random":
            bank_alpha.fill_random(rng)
            bank_beta.fill_random(rng)

    state = DualEncoderState(
        format_alpha=plan.format_alpha,
        format_beta=plan.format_beta,
        alpha=alpha,
        beta=beta,
        alpha_m=alpha_m,
        beta_m=beta_m,
        ema_momentum=cfg.contrast.ema_momentum,
        tau=cfg.contrast.tau,
        bank_alpha=bank_alpha,
        bank_beta=bank_beta,
    )
    cantidad = sum(t.size for t in state.parameters())
    logger.info(
        f"🧩 Estrategia {estrategia.kind.value}: ({plan.format_alpha.value}, {plan.format_beta.value}), "
        f"{cantidad} parámetros, pesos compartidos={state.shares_weights}, bancos={state.has_banks}"
    )
    return state, plan


def state_tensors(state: DualEncoderState) -> Dict[str, np.ndarray]:
    """Parámetros, espejos y bancos como diccionario nombre -> arreglo (para checkpoints)"""
    tensores: Dict[str, np.ndarray] = {}
    for nombre, tensor in state.named_parameters():
        tensores[nombre] = tensor.data
    for nombre, tensor in state.named_mirrors():
        tensores[nombre] = tensor.data
    if state.has_banks:
        tensores[BANK_ALPHA] = state.bank_alpha.state()
        tensores[BANK_BETA] = state.bank_beta.state()
    return tensores


def load_state_tensors(state: DualEncoderState, tensores: Mapping[str, np.ndarray], strict: bool = True) -> None:
    """
    Restaura un estado desde un checkpoint

    Args:
        state: Estado con la misma arquitectura
        tensores: Diccionario nombre -> arreglo
        strict: Si True exige que estén todos los tensores (los bancos son opcionales)

    Raises:
        ConfigurationError: Si falta un tensor o su forma no coincide
    """
    for nombre, tensor in state.named_parameters() + state.named_mirrors():
        if nombre not in tensores:
            if strict:
                raise ConfigurationError(f"Checkpoint sin el tensor '{nombre}'")
            continue
        valor = np.asarray(tensores[nombre], dtype=np.float64)
        if valor.shape != tensor.shape:
            raise ConfigurationError(f"Tensor '{nombre}': forma {valor.shape} en checkpoint, se esperaba {tensor.shape}")
        tensor.data = valor.copy()

    if state.has_banks:
        for nombre, banco in ((BANK_ALPHA, state.bank_alpha), (BANK_BETA, state.bank_beta)):
            if nombre in tensores:
                banco.load_state(tensores[nombre])
