"""
Trainer - Loop de pre-entrenamiento, optimizador, evaluación y exportación de métricas
"""
from .optimizer import lr_schedule, sgd_step, init_velocity
from .loop import RunMetrics, pretrain, VELOCITY_PREFIX
from .evaluation import MatchingResult, eval_matching, evaluate_state
from .checkgrad import GRADIENT_CASES, TINY_ENCODER, run_gradient_suite
from .export import CSV_COLUMNS, export_run_metrics, metrics_frame, write_metrics_csv

__all__ = [
    # Optimizador
    'lr_schedule',
    'sgd_step',
    'init_velocity',

    # Loop
    'RunMetrics',
    'pretrain',
    'VELOCITY_PREFIX',

    # Evaluación
    'MatchingResult',
    'eval_matching',
    'evaluate_state',

    # Gradientes
    'GRADIENT_CASES',
    'TINY_ENCODER',
    'run_gradient_suite',

    # Exportación
    'CSV_COLUMNS',
    'export_run_metrics',
    'metrics_frame',
    'write_metrics_csv'
]
