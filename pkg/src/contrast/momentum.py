"""
Estado dual de encoders (query + momentum) y actualización EMA
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from loguru import logger

from ..diffmath import Tensor
from ..encoders import EncoderParams
from ..errors import ContractError
from ..geometry import ViewFormat
from .memory_bank import MemoryBank


@dataclass
class Branch:
    """Encoder de un formato más su cabeza de proyección"""

    encoder: EncoderParams
    head: EncoderParams

    def named_tensors(self) -> Iterator[Tuple[str, Tensor]]:
        for nombre, tensor in self.encoder.items():
            yield f"encoder.{nombre}", tensor
        for nombre, tensor in self.head.items():
            yield f"head.{nombre}", tensor

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_tensors()]

    def mirror(self) -> "Branch":
        return Branch(self.encoder.mirror(), self.head.mirror())


@dataclass
class DualEncoderState:
    """
    Ramas α y β (query), sus espejos momentum y los memory banks

    Cuando α y β tienen el mismo formato, alpha y beta son el mismo objeto
    (pesos compartidos), igual que alpha_m y beta_m.
    """

    format_alpha: ViewFormat
    format_beta: ViewFormat
    alpha: Branch
    beta: Branch
    alpha_m: Branch
    beta_m: Branch
    ema_momentum: float = 0.999
    tau: float = 0.07
    bank_alpha: Optional[MemoryBank] = None
    bank_beta: Optional[MemoryBank] = None

    @property
    def shares_weights(self) -> bool:
        return self.alpha is self.beta

    @property
    def has_banks(self) -> bool:
        return self.bank_alpha is not None and self.bank_beta is not None

    def require_banks(self) -> Tuple[MemoryBank, MemoryBank]:
        if not self.has_banks:
            raise ContractError("Este estado no tiene memory banks (estrategia sólo local)")
        return self.bank_alpha, self.bank_beta

    def query_branches(self) -> Dict[str, Branch]:
        return {"alpha": self.alpha} if self.shares_weights else {"alpha": self.alpha, "beta": self.beta}

    def momentum_branches(self) -> Dict[str, Branch]:
        return {"alpha_m": self.alpha_m} if self.shares_weights else {"alpha_m": self.alpha_m, "beta_m": self.beta_m}

    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        """Tensores entrenables únicos (un solo juego cuando se comparten pesos)"""
        return [
            (f"{rama}.{nombre}", tensor)
            for rama, branch in self.query_branches().items()
            for nombre, tensor in branch.named_tensors()
        ]

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_parameters()]

    def named_mirrors(self) -> List[Tuple[str, Tensor]]:
        return [
            (f"{rama}.{nombre}", tensor)
            for rama, branch in self.momentum_branches().items()
            for nombre, tensor in branch.named_tensors()
        ]


def ema_update(state: DualEncoderState) -> None:
    """
    Actualiza los espejos momentum: θ' <- m·θ' + (1 - m)·θ
    """
    m = state.ema_momentum
    vistos = set()
    for fuente, espejo in ((state.alpha, state.alpha_m), (state.beta, state.beta_m)):
        for (nombre, tensor), (_, tensor_m) in zip(fuente.named_tensors(), espejo.named_tensors()):
            if id(tensor_m) in vistos:
                continue
            vistos.add(id(tensor_m))
            if tensor_m.shape != tensor.shape:
                raise ContractError(f"Espejo con forma distinta en {nombre}: {tensor_m.shape} vs {tensor.shape}")
            tensor_m.data = m * tensor_m.data + (1.0 - m) * tensor.data
    logger.trace(f"EMA aplicada a {len(vistos)} tensores (m={m})")
