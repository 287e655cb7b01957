import numpy as np
import pytest

from matpath import meshio
from matpath.errors import InputError
from matpath.synthetic import uv_sphere


def test_obj_off_round_trip(tmp_path):
    v, f = uv_sphere(5, 6)
    v = v * np.pi
    meshio.write_obj(tmp_path / "a.obj", v, f)
    meshio.write_off(tmp_path / "a.off", v, f)
    for name in ("a.obj", "a.off"):
        v2, f2 = meshio.read_mesh(tmp_path / name)
        assert np.array_equal(v, v2)
        assert np.array_equal(f, f2)


def test_obj_polygons_and_extras(tmp_path):
    (tmp_path / "q.obj").write_text(
        "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/1 3/3/1 -1/4/1\n"
    )
    v, f = meshio.read_obj(tmp_path / "q.obj")
    assert v.shape == (4, 3)
    assert f.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_off_header_variants(tmp_path):
    (tmp_path / "t.off").write_text("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    v, f = meshio.read_off(tmp_path / "t.off")
    assert v.shape == (3, 3) and f.tolist() == [[0, 1, 2]]
    (tmp_path / "bad.off").write_text("PLY\n")
    with pytest.raises(InputError):
        meshio.read_off(tmp_path / "bad.off")
    (tmp_path / "short.off").write_text("OFF\n3 1 0\n0 0 0\n")
    with pytest.raises(InputError):
        meshio.read_off(tmp_path / "short.off")
    with pytest.raises(InputError):
        meshio.read_mesh(tmp_path / "x.ply")


def test_features_csv(tmp_path):
    x = np.random.default_rng(0).normal(size=(5, 3))
    meshio.write_features(tmp_path / "f.csv", x)
    assert np.array_equal(meshio.read_features(tmp_path / "f.csv"), x)
    (tmp_path / "h.csv").write_text("a,b\n1,2\n3,4\n")
    assert meshio.read_features(tmp_path / "h.csv").tolist() == [[1, 2], [3, 4]]
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(InputError):
        meshio.read_features(tmp_path / "r.csv")


def test_load_shape(tmp_path):
    v, f = uv_sphere(4, 5)
    meshio.write_off(tmp_path / "ball.off", v, f)
    meshio.write_features(tmp_path / "ball.csv", np.ones((len(v), 2)))
    s = meshio.load_shape(tmp_path / "ball.off", tmp_path / "ball.csv")
    assert s.id == "ball" and s.features.shape == (len(v), 2)
    assert [p.name for p in meshio.mesh_files(tmp_path)] == ["ball.off"]
