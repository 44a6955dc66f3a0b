#!/usr/bin/env python3
"""
Contrasta3D - Pre-entrenamiento contrastivo 3D unificado a escala de escritorio
Script principal con la interfaz de línea de comandos

Comandos:
1. synth           Renderiza frames sintéticos RGB-D a un directorio
2. pretrain        Pre-entrena una estrategia (dpco, dvco, pvco, ppco, ipco, pointcontrast, ddco)
3. checkgrad       Verifica gradientes de operaciones, encoders y pérdidas
4. eval-matching   Precisión de emparejamiento local de un checkpoint
5. export-metrics  Exporta las métricas de una ejecución a CSV
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

# Agregar src al path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import LOG_LEVEL, LOGS_DIR, PRESETS, StrategyKind, TrainConfig, load_run_config
from src.database import database_url_for_run
from src.errors import Contrasta3DError
from src.synthdata import DirectoryFrames, SyntheticFrames, write_frames
from src.trainer import eval_matching, export_run_metrics, pretrain, run_gradient_suite


def configurar_logger(nivel: str = LOG_LEVEL) -> None:
    """Sink de consola con color y archivo diario rotativo"""
    logger.remove()
    logger.add(sys.stderr, level=nivel, format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}")
    LOGS_DIR.mkdir(parents=True, exist_ok=True)
    logger.add(
        str(LOGS_DIR / "contrasta3d_{time:YYYY-MM-DD}.log"),
        rotation="100 MB",
        retention="30 days",
        level="DEBUG",
    )


def fuente_de_frames(data: str, cfg: TrainConfig):
    """'synth' -> frames sintéticos según la configuración; otro valor -> directorio"""
    pares = cfg.strategy.world_anchors
    if data == "synth":
        return SyntheticFrames(cfg.render, cfg.frames, cfg.seed, pairs=pares, min_overlap=cfg.contrast.min_overlap)
    return DirectoryFrames(data, pairs=pares)


def frames_de_validacion(data: str, cfg: TrainConfig):
    """Frames sintéticos disjuntos de los de entrenamiento (sólo con --data synth)"""
    if data != "synth" or cfg.holdout_frames == 0:
        return None
    return SyntheticFrames(
        cfg.render,
        cfg.holdout_frames,
        cfg.seed,
        pairs=cfg.strategy.world_anchors,
        start=cfg.frames,
        min_overlap=cfg.contrast.min_overlap,
    )


# ========== COMANDOS ==========

def comando_synth(args) -> int:
    cfg = load_run_config(args.config, args.preset, seed=args.seed, frames=args.frames)
    fuente = SyntheticFrames(cfg.render, cfg.frames, cfg.seed, pairs=args.pairs, min_overlap=cfg.contrast.min_overlap)
    logger.info(f"🚀 Renderizando {len(fuente)} {'pares' if args.pairs else 'frames'} en {args.out}")
    write_frames(fuente, args.out, workers=args.workers if args.workers is not None else cfg.workers)
    return 0


def comando_pretrain(args) -> int:
    cfg = load_run_config(
        args.config,
        args.preset,
        strategy=args.strategy,
        output_dir=args.out,
        seed=args.seed,
        epochs=args.epochs,
        frames=args.frames,
        workers=args.workers,
        use_local=False if args.no_local else None,
        use_global=False if args.no_global else None,
    )
    metricas = pretrain(cfg, fuente_de_frames(args.data, cfg), holdout=frames_de_validacion(args.data, cfg))

    epocas = metricas.epoch_means()
    if len(epocas):
        logger.info(
            f"📊 Pérdida media: época 1 = {epocas['total'].iloc[0]:.4f}, "
            f"época {len(epocas)} = {epocas['total'].iloc[-1]:.4f}"
        )
    return 0


def comando_checkgrad(args) -> int:
    resultados = run_gradient_suite(seeds=range(args.seeds), cases=args.case or None)
    fallidos = [r for r in resultados if not r.passed]
    for r in fallidos:
        logger.error(f"❌ {r.name}: error máx {r.max_rel_error:.2e}; {'; '.join(r.failures[:3])}")
    return 1 if fallidos else 0


def comando_eval_matching(args) -> int:
    ruta_ckpt = Path(args.ckpt)
    config = args.config
    if config is None and (ruta_ckpt.parent / "run_config.env").exists():
        config = str(ruta_ckpt.parent / "run_config.env")
    cfg = load_run_config(config, args.preset)
    frames = fuente_de_frames(args.data, cfg) if args.data != "synth" else frames_de_validacion(args.data, cfg)
    if frames is None:
        logger.error("❌ No hay frames de validación (holdout_frames = 0)")
        return 1
    resultado = eval_matching(ruta_ckpt, frames, cfg)
    print(f"acc={resultado.accuracy:.6f} chance={resultado.chance:.6f} pairs={resultado.pairs} frames={resultado.frames}")
    return 0


def comando_export_metrics(args) -> int:
    url = args.db or database_url_for_run(args.out)
    export_run_metrics(url, args.csv, args.run)
    return 0


def crear_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrasta3d", description="Pre-entrenamiento contrastivo 3D unificado")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Nivel de log de consola")
    sub = parser.add_subparsers(dest="comando", required=True)

    synth = sub.add_parser("synth", help="Renderiza frames sintéticos")
    synth.add_argument("--frames", type=int, default=None)
    synth.add_argument("--out", required=True)
    synth.add_argument("--pairs", action="store_true", help="Pares solapados (archivos consecutivos)")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--config", default=None)
    synth.add_argument("--preset", default="desk", choices=sorted(PRESETS))
    synth.add_argument("--workers", type=int, default=None)
    synth.set_defaults(func=comando_synth)

    pre = sub.add_parser("pretrain", help="Pre-entrena una estrategia")
    pre.add_argument("--strategy", default=None, choices=[k.value for k in StrategyKind])
    pre.add_argument("--config", default=None)
    pre.add_argument("--preset", default="desk", choices=sorted(PRESETS))
    pre.add_argument("--data", default="synth", help="Directorio de frames o 'synth'")
    pre.add_argument("--out", default=None)
    pre.add_argument("--seed", type=int, default=None)
    pre.add_argument("--epochs", type=int, default=None)
    pre.add_argument("--frames", type=int, default=None)
    pre.add_argument("--workers", type=int, default=None)
    pre.add_argument("--no-local", action="store_true", help="Desactiva la pérdida local")
    pre.add_argument("--no-global", action="store_true", help="Desactiva la pérdida global")
    pre.set_defaults(func=comando_pretrain)

    check = sub.add_parser("checkgrad", help="Verifica gradientes por diferencias finitas")
    check.add_argument("--seeds", type=int, default=10)
    check.add_argument("--case", action="append", default=[], help="Caso a verificar (repetible)")
    check.set_defaults(func=comando_checkgrad)

    ev = sub.add_parser("eval-matching", help="Precisión de emparejamiento de un checkpoint")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", default="synth")
    ev.add_argument("--config", default=None, help="Por defecto run_config.env junto al checkpoint")
    ev.add_argument("--preset", default="desk", choices=sorted(PRESETS))
    ev.set_defaults(func=comando_eval_matching)

    exp = sub.add_parser("export-metrics", help="Exporta métricas de una ejecución a CSV")
    exp.add_argument("--csv", required=True)
    exp.add_argument("--run", type=int, default=None, help="ID de ejecución (por defecto la última)")
    exp.add_argument("--out", default="runs/desk", help="Directorio de la ejecución (base SQLite)")
    exp.add_argument("--db", default=None, help="URL de base explícita")
    exp.set_defaults(func=comando_export_metrics)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal"""
    args = crear_parser().parse_args(argv)
    configurar_logger(args.log_level)

    try:
        return args.func(args)

    except KeyboardInterrupt:
        logger.info("⏸️  Detenido por el usuario")
        return 130

    except Contrasta3DError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
