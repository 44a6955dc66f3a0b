"""
Tests de estrategias: armado del estado, plan de vistas y paso de entrenamiento
"""
import copy
import math
from dataclasses import replace

import numpy as np
import pytest

from src.config import ContrastConfig, StrategyConfig, StrategyKind
from src.contrast import MemoryBank
from src.diffmath import Tape, backward
from src.errors import ConfigurationError, ContractError
from src.geometry import ViewFormat
from src.strategies import (
    SkippedFrame,
    build_strategy,
    build_views,
    effective_match_radius,
    frame_loss,
    load_state_tensors,
    prepare_views,
    state_tensors,
    training_step,
)

from .conftest import config_chica, frame_plano


class TestBuildStrategy:

    @pytest.mark.parametrize("kind", list(StrategyKind))
    def test_formatos_de_cada_estrategia(self, tmp_path, kind):
        cfg = config_chica(tmp_path, kind=kind.value)
        state, plan = build_strategy(cfg, np.random.default_rng(0))
        assert (state.format_alpha, state.format_beta) == (plan.format_alpha, plan.format_beta)
        assert state.shares_weights == (plan.format_alpha is plan.format_beta)

    def test_ppco_un_solo_juego_de_pesos(self, tmp_path):
        state, _ = build_strategy(config_chica(tmp_path, kind="ppco"), np.random.default_rng(0))
        assert state.alpha is state.beta
        assert state.alpha_m is state.beta_m
        nombres = [n for n, _ in state.named_parameters()]
        assert all(n.startswith("alpha.") for n in nombres)

    def test_pointcontrast_sin_bancos(self, tmp_path):
        state, plan = build_strategy(config_chica(tmp_path, kind="pointcontrast"), np.random.default_rng(0))
        assert not plan.use_global and plan.world_anchors
        with pytest.raises(ContractError):
            state.require_banks()

    def test_pointcontrast_fuerza_solo_local(self):
        assert StrategyConfig(kind="pointcontrast", use_global=True).use_global is False

    def test_bancos_aleatorios(self, cfg_chica):
        state, _ = build_strategy(cfg_chica, np.random.default_rng(0))
        bank_alpha, bank_beta = state.require_banks()
        assert bank_alpha.filled_count == bank_alpha.capacity == 8
        np.testing.assert_allclose(np.linalg.norm(bank_beta.keys(), axis=1), 1.0)

    def test_espejos_iguales_al_inicio(self, cfg_chica):
        state, _ = build_strategy(cfg_chica, np.random.default_rng(0))
        for (_, t), (_, m) in zip(state.named_parameters(), state.named_mirrors()):
            np.testing.assert_array_equal(t.data, m.data)

    def test_formato_sin_encoder(self, cfg_chica):
        with pytest.raises(ConfigurationError):
            build_strategy(cfg_chica, np.random.default_rng(0), registry={})


class TestRadio:

    def test_con_voxels_media_diagonal(self):
        assert effective_match_radius(0.05, 0.2, ViewFormat.POINT, ViewFormat.VOXEL) == pytest.approx(
            0.2 * math.sqrt(3.0) / 2.0
        )

    def test_sin_voxels_sin_cambios(self):
        assert effective_match_radius(0.05, 0.2, ViewFormat.DEPTH, ViewFormat.POINT) == 0.05


class TestBuildViews:

    def test_vistas_globales(self, cfg_chica, plano):
        _, plan = build_strategy(cfg_chica, np.random.default_rng(0))
        vistas = build_views(plano, plan, np.random.default_rng(1))
        assert vistas.alpha1.format is ViewFormat.DEPTH and vistas.beta1.format is ViewFormat.POINT
        assert vistas.alpha2 is not None and vistas.beta2 is not None

    def test_determinista(self, cfg_chica, plano):
        _, plan = build_strategy(cfg_chica, np.random.default_rng(0))
        a = build_views(plano, plan, np.random.default_rng(2))
        b = build_views(plano, plan, np.random.default_rng(2))
        np.testing.assert_array_equal(a.beta1.anchors, b.beta1.anchors)
        np.testing.assert_array_equal(a.alpha2.anchors, b.alpha2.anchors)

    def test_pointcontrast_con_frame_suelto(self, tmp_path, plano):
        _, plan = build_strategy(config_chica(tmp_path, kind="pointcontrast"), np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            build_views(plano, plan, np.random.default_rng(1))

    def test_frame_degenerado_se_omite(self, cfg_chica, plano):
        _, plan = build_strategy(cfg_chica, np.random.default_rng(0))
        plano.depth.valid[:] = False
        resultado = prepare_views(plano, plan, np.random.default_rng(1))
        assert isinstance(resultado, SkippedFrame)
        assert resultado.index == plano.index


class TestTrainingStep:

    def test_gradientes_finitos_y_bancos(self, cfg_chica, frames_planos):
        state, plan = build_strategy(cfg_chica, np.random.default_rng(0))
        cursor = state.bank_alpha.write_cursor

        reporte, grads = training_step(state, frames_planos[:2], cfg_chica, np.random.default_rng(1), plan)

        assert reporte.frames + reporte.skipped == 2
        assert reporte.frames > 0
        assert np.isfinite(reporte.total)
        assert set(grads) == {n for n, _ in state.named_parameters()}
        assert all(np.all(np.isfinite(g)) for g in grads.values())
        assert state.bank_alpha.write_cursor == (cursor + reporte.frames) % state.bank_alpha.capacity

    def test_banco_vacio_omite_global(self, tmp_path, frames_planos):
        cfg = config_chica(tmp_path, contrast=ContrastConfig(bank_size=8, bank_init="empty", match_radius=0.5, max_pairs=64))
        state, plan = build_strategy(cfg, np.random.default_rng(0))

        reporte, _ = training_step(state, frames_planos[:2], cfg, np.random.default_rng(1), plan)

        assert reporte.global_skipped
        assert reporte.g_ab == reporte.g_ba == 0.0
        assert state.bank_beta.filled_count == reporte.frames

    def test_lote_sin_frames_validos(self, cfg_chica):
        state, plan = build_strategy(cfg_chica, np.random.default_rng(0))
        vacio = frame_plano()
        vacio.depth.valid[:] = False

        reporte, grads = training_step(state, [vacio], cfg_chica, np.random.default_rng(1), plan)

        assert reporte.empty and reporte.skipped == 1
        assert grads == {}

    def test_pointcontrast_con_pares(self, tmp_path):
        cfg = config_chica(tmp_path, kind="pointcontrast")
        state, plan = build_strategy(cfg, np.random.default_rng(0))
        par = (frame_plano(index=0), frame_plano(index=1))

        reporte, grads = training_step(state, [par], cfg, np.random.default_rng(1), plan)

        assert reporte.frames == 1
        assert reporte.g_ab == 0.0 and reporte.l_ab > 0.0
        assert all(np.all(np.isfinite(g)) for g in grads.values())


class TestCheckpointDeEstado:

    def test_ida_y_vuelta(self, cfg_chica):
        origen, _ = build_strategy(cfg_chica, np.random.default_rng(0))
        destino, _ = build_strategy(cfg_chica, np.random.default_rng(99))

        load_state_tensors(destino, state_tensors(origen))

        for (_, a), (_, b) in zip(origen.named_parameters(), destino.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(origen.bank_alpha.keys(), destino.bank_alpha.keys())

    def test_tensor_faltante(self, cfg_chica):
        state, _ = build_strategy(cfg_chica, np.random.default_rng(0))
        tensores = state_tensors(state)
        tensores.pop(next(iter(tensores)))
        with pytest.raises(ConfigurationError):
            load_state_tensors(state, tensores)

    def test_forma_distinta(self, cfg_chica):
        state, _ = build_strategy(cfg_chica, np.random.default_rng(0))
        tensores = state_tensors(state)
        nombre = next(iter(tensores))
        tensores[nombre] = np.zeros(3)
        with pytest.raises(ConfigurationError):
            load_state_tensors(state, tensores)


def _lote(kind: StrategyKind):
    if kind is StrategyKind.POINTCONTRAST:
        return [(frame_plano(index=0), frame_plano(index=1))]
    return [frame_plano(index=i, inclinacion=0.3 + 0.1 * i) for i in range(2)]


def _gradientes(estado, vistas, cfg, plan):
    with Tape() as cinta:
        perdida = frame_loss(estado, vistas, cfg, np.random.default_rng(2), plan)
    por_id = backward(cinta, perdida)
    return perdida.item(), {n: por_id.get(id(t), np.zeros_like(t.data)) for n, t in estado.named_parameters()}


class TestCableado:

    def test_ppco_acumula_ambas_ramas_en_los_pesos_compartidos(self, tmp_path, plano):
        cfg = config_chica(tmp_path, kind="ppco")
        compartido, plan = build_strategy(cfg, np.random.default_rng(0))
        separado = replace(compartido, beta=copy.deepcopy(compartido.alpha))
        assert not separado.shares_weights
        vistas = build_views(plano, plan, np.random.default_rng(1))

        perdida_c, grads_c = _gradientes(compartido, vistas, cfg, plan)
        perdida_s, grads_s = _gradientes(separado, vistas, cfg, plan)

        assert perdida_c == pytest.approx(perdida_s, abs=1e-12)
        assert set(grads_c) == {n for n in grads_s if n.startswith("alpha.")}
        for nombre, g in grads_c.items():
            suma = grads_s[nombre] + grads_s["beta." + nombre[len("alpha."):]]
            np.testing.assert_allclose(g, suma, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("kind", ["dpco", "pointcontrast"])
    def test_sin_global_no_depende_del_banco(self, tmp_path, kind):
        cfg = config_chica(tmp_path, strategy=StrategyConfig(kind=kind, use_global=False))
        resultados = []
        for semilla_banco in (3, 4):
            state, plan = build_strategy(cfg, np.random.default_rng(0))
            state.bank_alpha, state.bank_beta = MemoryBank(8, 4), MemoryBank(8, 4)
            state.bank_alpha.fill_random(np.random.default_rng(semilla_banco))
            state.bank_beta.fill_random(np.random.default_rng(semilla_banco + 10))
            antes = state.bank_alpha.keys().copy()

            reporte, grads = training_step(state, _lote(StrategyKind(kind)), cfg, np.random.default_rng(1), plan)

            np.testing.assert_array_equal(state.bank_alpha.keys(), antes)
            resultados.append((reporte, grads))

        (r1, g1), (r2, g2) = resultados
        assert r1.frames > 0
        assert r1.to_dict() == r2.to_dict()
        assert list(g1) == list(g2)
        for nombre in g1:
            np.testing.assert_array_equal(g1[nombre], g2[nombre])

    @pytest.mark.parametrize("kind", list(StrategyKind))
    def test_ningun_gradiente_en_espejos_ni_bancos(self, tmp_path, kind):
        cfg = config_chica(tmp_path, kind=kind.value)
        state, plan = build_strategy(cfg, np.random.default_rng(0))
        espejos = {n: t.data.copy() for n, t in state.named_mirrors()}
        lote = _lote(kind)

        reporte, grads = training_step(state, lote, cfg, np.random.default_rng(1), plan)

        assert reporte.frames + reporte.skipped == len(lote)
        assert set(grads) <= {n for n, _ in state.named_parameters()}
        for nombre, tensor in state.named_mirrors():
            assert tensor.grad is None and not tensor.requires_grad
            np.testing.assert_array_equal(tensor.data, espejos[nombre])
        if state.has_banks:
            for banco in state.require_banks():
                claves = banco.keys()
                assert isinstance(claves, np.ndarray)
                np.testing.assert_allclose(np.linalg.norm(claves, axis=1), 1.0, atol=1e-6)
