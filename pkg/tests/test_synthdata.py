"""
Tests del generador sintético: ray casting, pares con pose y fuentes de frames
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from src.config import RenderConfig
from src.errors import ConfigurationError, DegeneratePoseError
from src.geometry import overlap_fraction
from src.synthdata import (
    BadPixelModel,
    DirectoryFrames,
    Scene,
    Sphere,
    SyntheticFrames,
    generate_scene,
    look_at,
    render,
    render_pair,
    room_walls,
    write_frames,
)
from src.synthdata.frames import MAX_BAD_FRACTION, MIN_BAD_FRACTION

from .conftest import camara, frame_plano


class TestRender:

    def test_piso_desde_dos_metros(self):
        K = camara(32)
        frame = render(Scene(floor=True), look_at((1.0, 1.0, 2.0), (1.0, 1.0, 0.0)), K)
        assert frame.depth.valid.all()
        np.testing.assert_allclose(frame.depth.values, 2.0, atol=1e-12)

    def test_esfera_pixel_central(self):
        K = camara(33)  # punto principal exacto en el píxel 16
        escena = Scene(floor=False, spheres=[Sphere((0.0, 0.0, 5.0), 1.0)])
        frame = render(escena, look_at((0.0, 0.0, 0.0), (0.0, 0.0, 5.0)), K)
        assert frame.depth.valid[16, 16]
        assert abs(frame.depth.values[16, 16] - 4.0) < 1e-9
        # fuera de la silueta no hay intersección
        assert not frame.depth.valid[0, 0]

    def test_ningun_rayo_intersecta(self):
        with pytest.raises(DegeneratePoseError):
            render(Scene(floor=True), look_at((1.0, 1.0, 1.0), (1.0, 1.0, 3.0)), camara(16))

    def test_escena_vacia(self):
        with pytest.raises(ConfigurationError):
            Scene(floor=False)

    def test_banda_en_discontinuidades(self):
        K = camara(32)
        escena = Scene(floor=True, spheres=[Sphere((1.0, 1.0, 0.5), 0.3)])
        pose = look_at((1.0, 1.0, 2.0), (1.0, 1.0, 0.0))
        sin_banda = render(escena, pose, K, BadPixelModel(grazing_threshold=0.0, edge_band_px=0))
        con_banda = render(escena, pose, K, BadPixelModel(grazing_threshold=0.0, edge_band_px=2))
        assert con_banda.depth.valid_count < sin_banda.depth.valid_count < 32 * 32

    def test_color_en_rango(self):
        frame = render(Scene(floor=True), look_at((1.0, 1.0, 2.0), (1.0, 1.0, 0.0)), camara(16))
        assert frame.color.rgb.min() >= 0.0 and frame.color.rgb.max() <= 1.0


class TestEscenas:

    def test_paredes(self):
        paredes = room_walls(3.0, 4.0, 2.4)
        assert len(paredes) == 4

    def test_generacion_determinista(self):
        a = generate_scene(np.random.default_rng(3))
        b = generate_scene(np.random.default_rng(3))
        assert a.boxes == b.boxes and a.spheres == b.spheres

    def test_cantidad_de_primitivas(self):
        cfg = RenderConfig(min_primitives=2, max_primitives=4)
        for semilla in range(10):
            escena = generate_scene(np.random.default_rng(semilla), cfg)
            assert 2 <= len(escena.objects) <= 4


class TestRenderPair:

    def test_sin_baseline_poses_iguales(self):
        K = camara(32)
        escena = Scene(floor=True)
        pose = look_at((1.0, 1.0, 2.0), (1.0, 1.0, 0.0))
        a, b = render_pair(escena, K, 0.0, np.random.default_rng(0), pose=pose)
        np.testing.assert_array_equal(a.pose, b.pose)
        np.testing.assert_array_equal(a.depth.values, b.depth.values)

    def test_solapamiento_minimo(self):
        K = camara(32)
        escena = Scene(floor=True)
        pose = look_at((1.0, 1.0, 2.0), (1.0, 1.0, 0.0))
        a, b = render_pair(escena, K, 0.3, np.random.default_rng(1), pose=pose, min_overlap=0.3)
        assert overlap_fraction(a.depth, a.pose, b.depth, b.pose, K) >= 0.3
        assert np.linalg.norm(a.pose[:3, 3] - b.pose[:3, 3]) <= 0.3 + 1e-12


class TestSyntheticFrames:

    def test_determinista_sin_importar_el_orden(self):
        cfg = RenderConfig(width=32, height=32)
        a = SyntheticFrames(cfg, count=2, seed=3)
        b = SyntheticFrames(cfg, count=2, seed=3)
        segundo = a[1]
        _ = b[0]
        np.testing.assert_array_equal(segundo.depth.values, b[1].depth.values)
        np.testing.assert_array_equal(segundo.pose, b[1].pose)
        assert segundo.index == 1

    def test_fraccion_de_pixeles_malos(self):
        for frame in SyntheticFrames(RenderConfig(width=32, height=32), count=3, seed=5):
            assert MIN_BAD_FRACTION <= frame.bad_fraction <= MAX_BAD_FRACTION

    def test_pares_con_indices_consecutivos(self):
        a, b = SyntheticFrames(RenderConfig(width=32, height=32), count=1, seed=2, pairs=True)[0]
        assert (a.index, b.index) == (0, 1)

    def test_fuera_de_rango(self):
        with pytest.raises(IndexError):
            SyntheticFrames(RenderConfig(width=32, height=32), count=1)[1]

    def test_cache_acotado(self):
        fuente = SyntheticFrames(RenderConfig(width=32, height=32), count=6, seed=4, cache_size=2)
        primero = fuente[0]
        for frame in fuente:
            assert fuente.cached <= 2
        assert fuente[5] is frame
        # el 0 salió del cache: se vuelve a renderizar igual
        otra_vez = fuente[0]
        assert otra_vez is not primero
        np.testing.assert_array_equal(otra_vez.depth.values, primero.depth.values)

    def test_sin_cache(self):
        fuente = SyntheticFrames(RenderConfig(width=32, height=32), count=2, seed=4, cache_size=0)
        assert fuente[1] is not fuente[1]
        assert fuente.cached == 0
        with pytest.raises(ConfigurationError):
            SyntheticFrames(count=1, cache_size=-1)

    def test_hilos_concurrentes_mismos_frames(self):
        cfg = RenderConfig(width=32, height=32)
        secuencial = [f.depth.values for f in SyntheticFrames(cfg, count=6, seed=8)]
        compartida = SyntheticFrames(cfg, count=6, seed=8, cache_size=3)
        with ThreadPoolExecutor(max_workers=4) as pool:
            frames = list(pool.map(compartida.__getitem__, [0, 1, 2, 3, 4, 5, 0, 1, 5, 5, 2, 3]))
        assert compartida.cached <= 3
        for indice, frame in zip([0, 1, 2, 3, 4, 5, 0, 1, 5, 5, 2, 3], frames):
            assert frame.index == indice
            np.testing.assert_array_equal(frame.depth.values, secuencial[indice])


class TestDirectorio:

    def test_escribir_y_leer(self, tmp_path):
        frames = [frame_plano(index=i) for i in range(3)]

        escritos = write_frames(frames, tmp_path, workers=2)
        leidos = DirectoryFrames(tmp_path)

        assert escritos == 3 and len(leidos) == 3
        for original, leido in zip(frames, leidos):
            assert leido.index == original.index
            assert leido.intrinsics == original.intrinsics
            np.testing.assert_allclose(leido.depth.values, original.depth.values, atol=5e-4)
            np.testing.assert_allclose(leido.color.rgb, original.color.rgb, atol=0.5 / 255 + 1e-12)
            np.testing.assert_array_equal(leido.pose, original.pose)

    def test_modo_pares(self, tmp_path):
        write_frames([frame_plano(index=i) for i in range(5)], tmp_path)
        pares = DirectoryFrames(tmp_path, pairs=True)
        assert len(pares) == 2
        a, b = pares[1]
        assert (a.index, b.index) == (2, 3)

    def test_directorio_inexistente(self, tmp_path):
        with pytest.raises(ConfigurationError):
            DirectoryFrames(tmp_path / "nada")

    def test_directorio_sin_frames(self, tmp_path):
        with pytest.raises(ConfigurationError):
            DirectoryFrames(tmp_path)
