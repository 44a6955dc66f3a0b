"""
Tests de aumentación: recortes, parámetros y vistas con anchors
"""
import numpy as np
import pytest

from src.augment import (
    AugmentParams,
    CropSpec,
    cross_view_pair,
    make_image_view,
    make_view,
    sample_augment_params,
    sample_crops,
)
from src.config import AugmentSettings
from src.contrast import mine_pairs
from src.errors import ConfigurationError, EmptyInputError, PairRejectedError
from src.geometry import ColorImage, DepthMap, PointCloud, VoxelSet, ViewFormat, unproject_grid
from src.synthdata import Scene, look_at, render

from .conftest import camara


def _sin_aumentos(**extra) -> AugmentSettings:
    valores = dict(use_dropout=False, pixel_zero_fraction=0.0, rotate_points=False, flip_prob=0.0, depth_roll_max=0.0)
    valores.update(extra)
    return AugmentSettings(**valores)


class TestCrops:

    def test_misma_semilla_mismos_recortes(self, plano):
        a = sample_crops(plano.depth, np.random.default_rng(3))
        b = sample_crops(plano.depth, np.random.default_rng(3))
        assert a == b

    @pytest.mark.parametrize("semilla", range(20))
    def test_dentro_de_la_imagen(self, plano, semilla):
        settings = AugmentSettings()
        for crop in sample_crops(plano.depth, np.random.default_rng(semilla), settings):
            crop.check_inside(32, 32)
            assert crop.w >= settings.min_crop_px and crop.h >= settings.min_crop_px
            dx, dy, lado = crop.dropout_rect
            assert crop.x0 <= dx and dx + lado <= crop.x0 + crop.w
            assert crop.y0 <= dy and dy + lado <= crop.y0 + crop.h

    def test_imagen_menor_que_recorte_minimo(self):
        with pytest.raises(ConfigurationError):
            sample_crops(DepthMap(np.ones((8, 8))), np.random.default_rng(0))

    def test_dropout_fuera_del_recorte(self):
        with pytest.raises(ConfigurationError):
            CropSpec(0, 0, 8, 8, dropout_rect=(6, 6, 4))

    def test_mascara_de_dropout(self):
        crop = CropSpec(2, 3, 6, 5, dropout_rect=(4, 4, 2))
        mascara = crop.dropout_mask()
        assert mascara.shape == (5, 6)
        assert mascara.sum() == 4
        assert mascara[1:3, 2:4].all()

    def test_interseccion_de_anchors(self, plano):
        """Los anchors comunes de dos recortes son los píxeles válidos de la intersección de rectángulos"""
        K = plano.intrinsics
        c1, c2 = sample_crops(plano.depth, np.random.default_rng(11), _sin_aumentos())
        v1 = make_view(plano.depth, K, c1, ViewFormat.POINT, AugmentParams.identity())
        v2 = make_view(plano.depth, K, c2, ViewFormat.POINT, AugmentParams.identity())

        comunes = {tuple(p) for p in v1.source_pixels} & {tuple(p) for p in v2.source_pixels}
        x0, x1 = max(c1.x0, c2.x0), min(c1.x0 + c1.w, c2.x0 + c2.w)
        y0, y1 = max(c1.y0, c2.y0), min(c1.y0 + c1.h, c2.y0 + c2.h)
        esperados = {(u, v) for u in range(x0, x1) for v in range(y0, y1) if plano.depth.valid[v, u]}
        assert comunes == esperados


class TestAugmentParams:

    def test_determinista(self):
        settings = AugmentSettings()
        a = sample_augment_params(settings, np.random.default_rng(5))
        b = sample_augment_params(settings, np.random.default_rng(5))
        assert a == b

    def test_rangos(self):
        settings = AugmentSettings()
        rng = np.random.default_rng(6)
        for _ in range(50):
            p = sample_augment_params(settings, rng)
            assert settings.scale_min <= p.scale <= settings.scale_max
            assert abs(p.depth_roll_angle) <= settings.depth_roll_max
            assert 0.0 <= p.rotation_angle < 2 * np.pi
            assert p.pixel_zero_fraction == settings.pixel_zero_fraction

    def test_valores_invalidos(self):
        with pytest.raises(ConfigurationError):
            AugmentParams(pixel_zero_fraction=1.5)
        with pytest.raises(ConfigurationError):
            AugmentParams(scale=0.0)


class TestMakeView:

    def test_point_conserva_anchors(self, plano):
        """Rotación, escala y reflexión cambian las coordenadas pero no los anchors"""
        K = plano.intrinsics
        crop = CropSpec.full(32, 32)
        params = AugmentParams(rotation_angle=0.7, scale=1.2, flip_x=True, flip_z=True)

        vista = make_view(plano.depth, K, crop, ViewFormat.POINT, params)
        referencia = unproject_grid(plano.depth, K)[plano.depth.valid]

        assert isinstance(vista.payload, PointCloud)
        np.testing.assert_allclose(vista.anchors, referencia, atol=1e-12)
        assert not np.allclose(vista.payload.points, referencia)
        np.testing.assert_allclose(
            np.linalg.norm(vista.payload.points, axis=1), 1.2 * np.linalg.norm(referencia, axis=1), rtol=1e-12
        )

    def test_anchors_en_marco_sin_recortar(self, plano):
        K = plano.intrinsics
        crop = CropSpec(5, 7, 16, 18)
        vista = make_view(plano.depth, K, crop, ViewFormat.POINT, AugmentParams.identity())
        grid = unproject_grid(plano.depth, K)
        u, v = vista.source_pixels[:, 0], vista.source_pixels[:, 1]
        np.testing.assert_allclose(vista.anchors, grid[v, u], atol=1e-12)

    def test_puesta_en_cero(self, plano):
        K = plano.intrinsics
        crop = CropSpec.full(32, 32)
        vista = make_view(plano.depth, K, crop, ViewFormat.DEPTH, AugmentParams(pixel_zero_fraction=0.2, seed=3))
        validos = plano.depth.valid_count
        realizado = 1.0 - vista.payload.valid_count / validos
        assert abs(realizado - 0.2) <= 1.0 / validos

    def test_depth_anchors_por_pixel_valido(self, plano):
        K = plano.intrinsics
        vista = make_view(plano.depth, K, CropSpec(4, 4, 20, 20), ViewFormat.DEPTH, AugmentParams(depth_roll_angle=0.3))
        assert len(vista.anchors) == vista.payload.valid_count == int(vista.valid_mask.sum())
        # el anchor de cada píxel proyecta a su píxel de origen
        grid = unproject_grid(plano.depth, K)
        u, v = vista.source_pixels[:, 0], vista.source_pixels[:, 1]
        np.testing.assert_allclose(vista.anchors, grid[v, u], atol=1e-9)

    def test_giro_de_90_grados_permuta_anchors(self, plano):
        K = plano.intrinsics
        crop = CropSpec.full(32, 32)
        recta = make_view(plano.depth, K, crop, ViewFormat.DEPTH, AugmentParams.identity())
        girada = make_view(plano.depth, K, crop, ViewFormat.DEPTH, AugmentParams(depth_roll_angle=np.pi / 2))

        assert girada.payload.valid_count == recta.payload.valid_count
        np.testing.assert_allclose(girada.anchor_grid, np.rot90(recta.anchor_grid, -1), atol=1e-12)
        np.testing.assert_allclose(
            np.sort(girada.anchors, axis=0), np.sort(recta.anchors, axis=0), atol=1e-12
        )

    @pytest.mark.parametrize("semilla", range(10))
    def test_ningun_pixel_de_origen_en_el_dropout(self, plano, semilla):
        rng = np.random.default_rng(semilla)
        K = plano.intrinsics
        for crop in sample_crops(plano.depth, rng):
            dx, dy, lado = crop.dropout_rect
            params = AugmentParams(depth_roll_angle=float(rng.uniform(-0.5, 0.5)))
            vistas = [
                make_view(plano.depth, K, crop, ViewFormat.POINT, params),
                make_view(plano.depth, K, crop, ViewFormat.DEPTH, params),
                make_image_view(plano.color, plano.depth, K, crop, params),
            ]
            for vista in vistas:
                u, v = vista.source_pixels[:, 0], vista.source_pixels[:, 1]
                dentro = (u >= dx) & (u < dx + lado) & (v >= dy) & (v < dy + lado)
                assert not dentro.any(), vista.format

    def test_voxel(self, plano):
        K = plano.intrinsics
        vista = make_view(plano.depth, K, CropSpec.full(32, 32), ViewFormat.VOXEL, AugmentParams.identity(), voxel_size=0.2)
        assert isinstance(vista.payload, VoxelSet)
        assert len(vista.anchors) == len(vista.payload)

    def test_voxel_sin_tamano(self, plano):
        with pytest.raises(ConfigurationError):
            make_view(plano.depth, plano.intrinsics, CropSpec.full(32, 32), ViewFormat.VOXEL, AugmentParams.identity())

    def test_image_por_make_view(self, plano):
        with pytest.raises(ConfigurationError):
            make_view(plano.depth, plano.intrinsics, CropSpec.full(32, 32), ViewFormat.IMAGE, AugmentParams.identity())

    def test_recorte_sin_validos(self, plano):
        vacio = DepthMap(np.zeros((32, 32)))
        with pytest.raises(EmptyInputError):
            make_view(vacio, plano.intrinsics, CropSpec.full(32, 32), ViewFormat.POINT, AugmentParams.identity())


class TestImageView:

    def test_anchors_de_la_profundidad(self, plano):
        K = plano.intrinsics
        crop = CropSpec(2, 2, 20, 24, dropout_rect=(6, 6, 4))
        vista = make_image_view(plano.color, plano.depth, K, crop, AugmentParams(brightness=1.3, grayscale=True))

        assert vista.payload.rgb.shape == (24, 20, 3)
        # la región de dropout queda en negro antes del jitter de color
        np.testing.assert_array_equal(vista.payload.rgb[4:8, 4:8], 0.0)
        # escala de grises: canales iguales
        np.testing.assert_allclose(vista.payload.rgb[..., 0], vista.payload.rgb[..., 2])
        grid = unproject_grid(plano.depth, K)
        u, v = vista.source_pixels[:, 0], vista.source_pixels[:, 1]
        np.testing.assert_allclose(vista.anchors, grid[v, u], atol=1e-12)

    def test_color_no_alineado(self, plano):
        with pytest.raises(ConfigurationError):
            make_image_view(ColorImage(np.zeros((8, 8, 3))), plano.depth, plano.intrinsics, CropSpec.full(32, 32),
                            AugmentParams.identity())


class TestCrossViewPair:

    def _piso(self, x: float):
        K = camara(32)
        pose = look_at((x, 1.0, 2.0), (x, 1.0, 0.0))
        return render(Scene(floor=True), pose, K), K

    def test_traslacion_pura_anchors_mundo_coinciden(self):
        K = camara(32)
        paso = 4 * 2.0 / K.fx  # cuatro píxeles a 2 m de altura
        a, _ = self._piso(1.0)
        b, _ = self._piso(1.0 + paso)

        va, vb = cross_view_pair(a.depth, a.pose, b.depth, b.pose, K, min_overlap=0.3)
        pares = mine_pairs(va.anchors, vb.anchors, 1e-3)

        assert len(pares) == 28 * 32
        np.testing.assert_allclose(va.anchors[pares.alpha], vb.anchors[pares.beta], rtol=0, atol=1e-6)
        np.testing.assert_allclose(va.anchors[:, 2], 0.0, atol=1e-9)

    def test_sin_solapamiento(self):
        a, K = self._piso(1.0)
        b, _ = self._piso(30.0)
        with pytest.raises(PairRejectedError):
            cross_view_pair(a.depth, a.pose, b.depth, b.pose, K, min_overlap=0.3)
