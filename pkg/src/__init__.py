"""
Contrasta3D - Pre-entrenamiento contrastivo 3D unificado a escala de escritorio
"""
__version__ = "0.1.0"
