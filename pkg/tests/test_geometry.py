"""
Tests de geometría: modelo pinhole, voxelización, solapamiento y archivos de frames
"""
import numpy as np
import pytest
from PIL import Image

from src.errors import ConfigurationError, EmptyInputError
from src.geometry import (
    CameraIntrinsics,
    ColorImage,
    DepthMap,
    PointCloud,
    invert_pose,
    overlap_fraction,
    project,
    read_color_ppm,
    read_depth_pgm,
    read_intrinsics,
    read_pose,
    transform_points,
    unproject,
    unproject_grid,
    voxelize,
    write_color_ppm,
    write_depth_pgm,
    write_intrinsics,
    write_pose,
)

from .conftest import camara


def _profundidad_aleatoria(rng, alto=8, ancho=8, malos=0.2) -> DepthMap:
    valores = rng.uniform(0.5, 4.0, size=(alto, ancho))
    valores[rng.random((alto, ancho)) < malos] = 0.0
    return DepthMap(valores)


def _pose(rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    pose = np.eye(4)
    pose[:3, :3] = q
    pose[:3, 3] = rng.normal(size=3)
    return pose


class TestCameraIntrinsics:

    def test_focal_no_positiva(self):
        with pytest.raises(ConfigurationError):
            CameraIntrinsics(0.0, 10.0, 4.0, 4.0, 8, 8)

    def test_punto_principal_fuera_de_imagen(self):
        with pytest.raises(ConfigurationError):
            CameraIntrinsics(10.0, 10.0, 9.0, 4.0, 8, 8).validate()

    def test_recorte_desplaza_punto_principal(self):
        K = CameraIntrinsics(10.0, 11.0, 4.0, 5.0, 8, 8).cropped(2, 3, 4, 4)
        assert (K.cx, K.cy, K.width, K.height) == (2.0, 2.0, 4, 4)
        assert (K.fx, K.fy) == (10.0, 11.0)


class TestUnproject:

    def test_coincide_con_formula_por_pixel(self):
        rng = np.random.default_rng(0)
        depth = _profundidad_aleatoria(rng)
        K = CameraIntrinsics(7.0, 6.5, 3.2, 4.1, 8, 8)

        nube = unproject(depth, K)

        esperado = []
        for v in range(8):
            for u in range(8):
                d = depth.values[v, u]
                if d > 0:
                    esperado.append([(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d])
        np.testing.assert_allclose(nube.points, np.array(esperado), rtol=0, atol=1e-12)
        np.testing.assert_array_equal(nube.anchors, nube.points)
        assert len(nube) == depth.valid_count

    def test_grilla_con_nan_en_invalidos(self):
        rng = np.random.default_rng(1)
        depth = _profundidad_aleatoria(rng)
        K = camara(8)
        grid = unproject_grid(depth, K)
        assert np.all(np.isnan(grid[~depth.valid]))
        np.testing.assert_allclose(grid[depth.valid], unproject(depth, K).points)

    def test_sin_pixeles_validos(self):
        with pytest.raises(EmptyInputError):
            unproject(DepthMap(np.zeros((8, 8))), camara(8))

    def test_dimensiones_distintas(self):
        with pytest.raises(ConfigurationError):
            unproject(DepthMap(np.ones((8, 8))), camara(16))

    def test_valores_no_finitos_son_invalidos(self):
        valores = np.ones((4, 4))
        valores[0, 0] = np.nan
        valores[1, 1] = np.inf
        valores[2, 2] = -1.0
        depth = DepthMap(valores)
        assert depth.valid_count == 13
        assert depth.values[0, 0] == 0.0


class TestProject:

    @pytest.mark.parametrize("semilla", range(5))
    def test_ida_y_vuelta_por_pixel(self, semilla):
        rng = np.random.default_rng(semilla)
        depth = _profundidad_aleatoria(rng, 24, 32)
        K = CameraIntrinsics(30.0, 28.0, 15.3, 11.7, 32, 24)

        nube = unproject(depth, K)
        proy = project(nube, K)

        assert proy.in_bounds.all()
        np.testing.assert_allclose(proy.pixels, nube.pixels.astype(np.float64), rtol=0, atol=1e-6)
        np.testing.assert_allclose(proy.depth, depth.values[depth.valid], rtol=0, atol=1e-9)

    def test_puntos_detras_de_la_camara(self):
        proy = project(np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0]]), camara(8))
        assert not proy.in_bounds.any()


class TestVoxelize:

    def test_cantidad_igual_a_indices_distintos(self):
        rng = np.random.default_rng(3)
        puntos = rng.uniform(-2.0, 2.0, size=(20000, 3))
        tamano = 0.15

        voxels = voxelize(PointCloud(points=puntos), tamano)

        distintos = {tuple(np.floor(p / tamano).astype(int)) for p in puntos}
        assert len(voxels) == len(distintos)
        assert {tuple(i) for i in voxels.indices} == distintos

    def test_anchors_cerca_de_algun_punto(self):
        rng = np.random.default_rng(4)
        puntos = rng.uniform(0.0, 1.0, size=(500, 3))
        tamano = 0.2

        voxels = voxelize(PointCloud(points=puntos), tamano)

        distancias = np.linalg.norm(voxels.anchors[:, None, :] - puntos[None, :, :], axis=-1).min(axis=1)
        assert np.all(distancias <= tamano * np.sqrt(3.0))
        # el anchor es la media de los puntos de la celda: queda dentro de ella
        np.testing.assert_array_equal(np.floor(voxels.anchors / tamano).astype(int), voxels.indices)

    @pytest.mark.parametrize("tamano", [0.05, 0.15, 0.3])
    def test_idempotente_sobre_sus_anchors(self, tamano):
        rng = np.random.default_rng(5)
        voxels = voxelize(PointCloud(points=rng.uniform(-1.5, 1.5, size=(5000, 3))), tamano)

        otra_vez = voxelize(PointCloud(points=voxels.anchors), tamano)

        np.testing.assert_array_equal(otra_vez.indices, voxels.indices)
        np.testing.assert_allclose(otra_vez.anchors, voxels.anchors, atol=1e-12)

    def test_anchors_siguen_a_los_originales(self):
        puntos = np.array([[0.05, 0.05, 0.05], [0.15, 0.05, 0.05]])
        anchors = np.array([[1.0, 1.0, 1.0], [3.0, 3.0, 3.0]])
        voxels = voxelize(PointCloud(points=puntos, anchors=anchors), 0.5)
        assert len(voxels) == 1
        np.testing.assert_allclose(voxels.anchors, [[2.0, 2.0, 2.0]])
        np.testing.assert_allclose(voxels.features, [[1.0]])

    def test_tamano_invalido(self):
        with pytest.raises(ConfigurationError):
            voxelize(PointCloud(points=np.zeros((3, 3))), 0.0)

    def test_nube_vacia(self):
        with pytest.raises(EmptyInputError):
            voxelize(PointCloud(points=np.zeros((0, 3))), 0.1)


class TestPoses:

    def test_inversa(self):
        pose = _pose(np.random.default_rng(5))
        np.testing.assert_allclose(invert_pose(pose) @ pose, np.eye(4), atol=1e-12)

    def test_transformar_ida_y_vuelta(self):
        rng = np.random.default_rng(6)
        pose = _pose(rng)
        puntos = rng.normal(size=(50, 3))
        vuelta = transform_points(transform_points(puntos, pose), invert_pose(pose))
        np.testing.assert_allclose(vuelta, puntos, atol=1e-12)


class TestOverlap:

    def test_mismo_frame_solapa_completo(self, plano):
        K = plano.intrinsics
        assert overlap_fraction(plano.depth, np.eye(4), plano.depth, np.eye(4), K) == 1.0

    def test_traslacion_grande_no_solapa(self, plano):
        K = plano.intrinsics
        lejos = np.eye(4)
        lejos[0, 3] = 50.0
        assert overlap_fraction(plano.depth, np.eye(4), plano.depth, lejos, K) == 0.0

    def test_sin_pixeles_validos(self, plano):
        vacio = DepthMap(np.zeros_like(plano.depth.values))
        K = plano.intrinsics
        assert overlap_fraction(vacio, np.eye(4), plano.depth, np.eye(4), K) == 0.0


class TestArchivos:

    def test_profundidad_en_milimetros(self, tmp_path):
        rng = np.random.default_rng(7)
        milimetros = rng.integers(0, 5000, size=(6, 9))
        depth = DepthMap(milimetros / 1000.0)

        write_depth_pgm(tmp_path / "d.pgm", depth)
        leida = read_depth_pgm(tmp_path / "d.pgm")

        np.testing.assert_allclose(leida.values, depth.values, atol=1e-12)
        np.testing.assert_array_equal(leida.valid, depth.valid)

    def test_pgm_escrito_por_pillow(self, tmp_path):
        milimetros = np.array([[0, 1234], [65000, 2500]], dtype=np.int32)
        Image.fromarray(milimetros).save(tmp_path / "d.pgm", format="PPM")

        leida = read_depth_pgm(tmp_path / "d.pgm")

        np.testing.assert_allclose(leida.values, [[0.0, 1.234], [65.0, 2.5]], atol=1e-12)
        assert not leida.valid[0, 0] and leida.valid[1, 0]

    def test_archivo_escrito_es_pgm_16_bits(self, tmp_path):
        depth = DepthMap(np.array([[0.0, 1.234], [65.0, 2.5]]))
        write_depth_pgm(tmp_path / "d.pgm", depth)
        assert (tmp_path / "d.pgm").read_bytes().startswith(b"P5")
        with Image.open(tmp_path / "d.pgm") as imagen:
            np.testing.assert_array_equal(np.asarray(imagen), [[0, 1234], [65000, 2500]])

    def test_pgm_color_o_basura(self, tmp_path):
        write_color_ppm(tmp_path / "c.ppm", ColorImage(np.zeros((2, 2, 3))))
        (tmp_path / "x.pgm").write_bytes(b"no es una imagen")
        for nombre in ("c.ppm", "x.pgm"):
            with pytest.raises(ConfigurationError):
                read_depth_pgm(tmp_path / nombre)

    def test_color(self, tmp_path):
        rng = np.random.default_rng(8)
        imagen = ColorImage(rng.uniform(size=(5, 7, 3)))
        write_color_ppm(tmp_path / "c.ppm", imagen)
        np.testing.assert_allclose(read_color_ppm(tmp_path / "c.ppm").rgb, imagen.rgb, atol=0.5 / 255 + 1e-12)

    def test_intrinsecos_y_pose(self, tmp_path):
        K = CameraIntrinsics(31.25, 30.5, 15.5, 11.25, 32, 24)
        pose = _pose(np.random.default_rng(9))
        write_intrinsics(tmp_path / "k.txt", K)
        write_pose(tmp_path / "p.txt", pose)

        assert read_intrinsics(tmp_path / "k.txt") == K
        np.testing.assert_array_equal(read_pose(tmp_path / "p.txt"), pose)

    def test_intrinsecos_incompletos(self, tmp_path):
        (tmp_path / "k.txt").write_text("fx=1\nfy=1\n")
        with pytest.raises(ConfigurationError):
            read_intrinsics(tmp_path / "k.txt")
