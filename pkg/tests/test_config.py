"""
Tests de configuración: presets, claves planas y archivo de ejecución
"""
import pytest

from src.config import (
    PRESETS,
    StrategyKind,
    TrainConfig,
    load_run_config,
    save_run_config,
)
from src.errors import ConfigurationError
from src.geometry import ViewFormat

from .conftest import config_chica


class TestPresets:

    def test_escritorio_por_defecto(self):
        cfg = load_run_config()
        assert cfg.lr0 == 0.03 and cfg.sgd_momentum == 0.9
        assert cfg.contrast.tau == 0.07
        assert cfg.strategy.kind is StrategyKind.DPCO

    def test_preset_completo(self):
        cfg = load_run_config(preset="full")
        assert cfg.contrast.bank_size == 2 ** 15
        assert cfg.encoder.feature_dim == 128

    def test_preset_desconocido(self):
        with pytest.raises(ConfigurationError):
            load_run_config(preset="nube")

    def test_todos_los_presets_validan(self):
        for nombre in PRESETS:
            assert isinstance(load_run_config(preset=nombre), TrainConfig)


class TestClavesPlanas:

    def test_secciones(self):
        cfg = TrainConfig.from_flat({"strategy": "PVCo", "bank_size": "16", "widths": "4,8,12", "width": "48"})
        assert cfg.strategy.kind is StrategyKind.PVCO
        assert (cfg.strategy.format_alpha, cfg.strategy.format_beta) == (ViewFormat.POINT, ViewFormat.VOXEL)
        assert cfg.contrast.bank_size == 16
        assert cfg.encoder.widths == (4, 8, 12)
        assert cfg.render.width == 48

    def test_clave_desconocida(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_flat({"learning_rate": "0.1"})

    def test_valor_invalido(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_flat({"tau": "-1"})

    def test_estrategia_desconocida(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_flat({"strategy": "xyz"})

    def test_sin_terminos_activos(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_flat({"use_local": "false", "use_global": "false"})

    def test_entrada_multiplo_de_ocho(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_flat({"depth_input_size": "30"})

    def test_ida_y_vuelta(self, tmp_path):
        cfg = config_chica(tmp_path / "run", kind="ipco")
        assert TrainConfig.from_flat(cfg.to_flat()) == cfg


class TestArchivo:

    def test_guardar_y_cargar(self, tmp_path):
        cfg = config_chica(tmp_path / "run", kind="ddco")
        save_run_config(cfg, tmp_path / "run_config.env")
        assert load_run_config(str(tmp_path / "run_config.env")) == cfg

    def test_overrides_pisan_al_archivo(self, tmp_path):
        (tmp_path / "c.env").write_text("epochs=3\nseed=5\n")
        cfg = load_run_config(str(tmp_path / "c.env"), epochs=7, seed=None)
        assert (cfg.epochs, cfg.seed) == (7, 5)

    def test_archivo_inexistente(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_run_config(str(tmp_path / "no.env"))
