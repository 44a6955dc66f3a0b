"""
Contrast - Pérdidas InfoNCE local/global, memory banks y encoders momentum
"""
from .pairs import PairSet, mine_pairs
from .memory_bank import MemoryBank, bank_enqueue
from .losses import global_infonce, local_infonce, local_matching_accuracy, select_pairs, total_loss
from .momentum import Branch, DualEncoderState, ema_update

__all__ = [
    # Pares
    'PairSet',
    'mine_pairs',

    # Pérdidas
    'local_infonce',
    'global_infonce',
    'total_loss',
    'select_pairs',
    'local_matching_accuracy',

    # Memory bank
    'MemoryBank',
    'bank_enqueue',

    # Momentum
    'Branch',
    'DualEncoderState',
    'ema_update'
]
