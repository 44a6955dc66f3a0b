"""
Strategies - Variantes del framework unificado (DPCo, DVCo, PVCo, PPCo, IPCo, PointContrast, DDCo)
"""
from .plan import FrameViews, ViewPlan, build_views, effective_match_radius
from .state import build_strategy, load_state_tensors, state_tensors
from .step import DEGENERATE_ERRORS, SkippedFrame, StepReport, frame_loss, prepare_views, training_step

__all__ = [
    # Plan de vistas
    'ViewPlan',
    'FrameViews',
    'build_views',
    'effective_match_radius',
    'prepare_views',
    'SkippedFrame',

    # Estado
    'build_strategy',
    'state_tensors',
    'load_state_tensors',

    # Paso
    'StepReport',
    'training_step',
    'frame_loss',
    'DEGENERATE_ERRORS'
]
