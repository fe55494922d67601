import io

import numpy as np
import pytest

from dicluster import datasets
from dicluster.core import RunParams
from dicluster.dbscan import DbscanParams, dbscan
from dicluster.io import RasterImage, decode_ppm
from dicluster.pipelines import (SnapshotRecorder, blur_array, cluster_points, colors_to_bytes, emit_diagnostics,
                                 gaussian_blur, gaussian_kernel, image_to_features, scatter_raster, segment_image)


def test_blur_identity_and_constant():
    img = datasets.cluttered_image(24, 16)
    assert gaussian_blur(img, 0.0) == img
    flat = RasterImage(np.full((9, 7, 3), [12, 200, 99], np.uint8))
    for s in (0.5, 1.0, 3.0):
        assert gaussian_blur(flat, s) == flat


def test_blur_impulse_centre_weight():
    x = np.arange(-3, 4, dtype=float)
    w = np.exp(-x**2 / 2)
    centre = (w[3] / w.sum()) ** 2
    im = np.zeros((15, 15, 3))
    im[7, 7] = 1.0
    out = blur_array(im, 1.0)
    assert out[7, 7, 0] == pytest.approx(centre, abs=1e-6)
    assert out.sum() == pytest.approx(3.0)
    np.testing.assert_allclose(gaussian_kernel(1.0), w / w.sum())
    with pytest.raises(ValueError):
        blur_array(im, -1)


def test_features_layout():
    one = RasterImage(np.array([[[255, 0, 51]]], np.uint8))
    ens, space = image_to_features(one)
    np.testing.assert_allclose(ens.positions, [[0.5, 0.5, 1.0, 0.0, 0.2]])
    four = RasterImage(np.zeros((2, 2, 3), np.uint8))
    ens, space = image_to_features(four)
    assert {tuple(p[:2]) for p in ens.positions} == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert space.agent(1, 0) == 2 and space.pixel(3) == (1, 1)
    ens, space = image_to_features(RasterImage(np.zeros((321, 481, 3), np.uint8)))
    assert ens.count == 154401 == space.count


def test_combined_distance_is_euclidean():
    img = datasets.cluttered_image(10, 8)
    ens, _ = image_to_features(img)
    p = ens.positions
    ds2 = ((p[3, :2] - p[40, :2]) ** 2).sum()
    dc2 = ((p[3, 2:] - p[40, 2:]) ** 2).sum()
    assert np.linalg.norm(p[3] - p[40]) == pytest.approx(np.sqrt(ds2 + dc2))


def test_minmax_colour_scaling_renders_back():
    px = np.zeros((4, 6, 3), np.uint8)
    px[:, :3] = [40, 100, 7]
    px[:, 3:] = [80, 100, 200]
    img = RasterImage(px)
    ens, space = image_to_features(img, "minmax")
    assert ens.positions[:, 2].min() == 0 and ens.positions[:, 2].max() == 1
    assert np.all(ens.positions[:, 3] == 0.5)  # flat channel
    out, res = segment_image(img, RunParams(delta=0.5, m=3, n_max=3), sigma=0, color_scaling="minmax")
    assert out == img and res.cluster_count == 2


def test_colour_roundtrip_within_one_step():
    b = np.arange(256, dtype=np.uint8)
    np.testing.assert_array_equal(colors_to_bytes(b / 255.0), b)
    v = np.random.default_rng(0).random(1000)
    again = colors_to_bytes(colors_to_bytes(v) / 255.0)
    np.testing.assert_array_equal(again, colors_to_bytes(v))


def test_constant_image_is_one_cluster():
    img = RasterImage(np.full((12, 10, 3), [30, 160, 220], np.uint8))
    out, res = segment_image(img, RunParams(delta=0.5, m=5, n_max=5))
    assert res.cluster_count == 1 and out == img


@pytest.mark.parametrize("delta, m, n_max", [(0.3, 1, 0), (0.3, 5, 5), (0.3, 1, 20), (1.0, 20, 10)])
def test_constant_image_is_fixed_point(delta, m, n_max):
    # spatial clumps may split the image, but every cluster carries the one colour
    img = RasterImage(np.full((12, 10, 3), [30, 160, 220], np.uint8))
    out, res = segment_image(img, RunParams(delta=delta, m=m, n_max=n_max))
    assert res.cluster_count >= 1 and out == img


def test_two_tone_segments_into_flat_halves():
    img = datasets.two_tone_image()
    out, res = segment_image(img, RunParams(delta=0.2, m=3, n_max=3), sigma=0)
    assert res.cluster_count == 2
    assert out == img


def test_segment_is_deterministic():
    img = datasets.cluttered_image(40, 30, seed=3)
    p = RunParams(delta=0.2, m=4, n_max=5)
    a, _ = segment_image(img, p)
    b, _ = segment_image(img, p)
    assert a.pixels.tobytes() == b.pixels.tobytes()


def test_no_cluster_leaves_black():
    img = datasets.cluttered_image(8, 6)
    out, res = segment_image(img, RunParams(delta=0.01, m=50, n_max=1))
    assert res.degenerate
    assert not out.pixels.any()


def test_cluster_points_blobs_and_csv():
    pts, _ = datasets.two_blobs(seed=1)
    p = RunParams(delta=0.1, m=1, epsilon=0.05, n_max=40)
    run = cluster_points(pts, p)
    assert run.result.cluster_count == 2
    text = "x,y\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in pts)
    run2 = cluster_points(io.StringIO(text), p)
    np.testing.assert_array_equal(run.labels, run2.labels)
    assert set(run.result.stage_seconds) == {"scale", "evolve", "identify", "assign"}


def test_ring_blob_keeps_two_clusters():
    pts, truth = datasets.ring_blob(seed=0)
    run = cluster_points(pts, RunParams(delta=0.1, m=1, epsilon=0.05, n_max=40))
    assert run.result.cluster_count >= 2


def test_zero_steps_on_collapsed_blobs_matches_dbscan_style():
    rng = np.random.default_rng(0)
    pts = np.vstack([np.repeat(rng.random((1, 2)) * 0.3, 20, axis=0), np.repeat(0.7 + rng.random((1, 2)) * 0.3, 20, axis=0),
                     [[0.5, 0.9]]])
    run = cluster_points(pts, RunParams(delta=0.1, m=3, n_max=0))
    ref = dbscan(run.ensemble, DbscanParams(0.05, 4))
    np.testing.assert_array_equal(run.labels, ref.labels)


def test_point_noise_stays_unassigned_by_default():
    pts, _ = datasets.grid_with_noise(seed=0)
    p = RunParams(delta=0.1, m=1, epsilon=0.05, n_max=40)
    assert (cluster_points(pts, p).labels == -1).any()
    assert not (cluster_points(pts, p, absorb_outliers=True).labels == -1).any()


def test_diagnostics_zero_steps(tmp_path):
    img = datasets.cluttered_image(12, 9)
    ens, _ = image_to_features(gaussian_blur(img, 1.0))
    rec = SnapshotRecorder(ens.positions)
    segment_image(img, RunParams(delta=0.3, m=3, n_max=0), observer=rec)
    files = emit_diagnostics(rec, tmp_path)
    assert sorted(f.name for f in files) == ["scatter_0.ppm", "snapshot_0.csv"]
    snap = np.loadtxt(tmp_path / "snapshot_0.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(snap[:, 1:], ens.positions)
    assert (tmp_path / "snapshot_0.csv").read_text().splitlines()[0] == "id,x1,x2,x3,x4,x5"


def test_diagnostics_ten_steps_shrink(tmp_path):
    pts, _ = datasets.two_blobs(200, seed=2)
    from dicluster.core import scale_to_unit_cube

    rec = SnapshotRecorder(scale_to_unit_cube(pts)[0].positions)
    cluster_points(pts, RunParams(delta=0.1, m=1, n_max=10), observer=rec)
    emit_diagnostics(rec, tmp_path)
    assert len(list(tmp_path.glob("snapshot_*.csv"))) == 11
    assert len(list(tmp_path.glob("scatter_*.ppm"))) == 11
    prev = None
    for n in range(11):
        s = np.loadtxt(tmp_path / f"snapshot_{n}.csv", delimiter=",", skiprows=1)[:, 1:]
        box = np.vstack([s.min(axis=0), s.max(axis=0)])
        if prev is not None:
            assert np.all(box[0] >= prev[0]) and np.all(box[1] <= prev[1])
        prev = box
    img = decode_ppm((tmp_path / "scatter_3.ppm").read_bytes())
    assert img.width == img.height == 512


def test_scatter_of_collapsed_state():
    pos = np.vstack([np.full((10, 5), 0.2), np.full((5, 5), 0.7), np.full((3, 5), 0.9)])
    img = scatter_raster(pos)
    lit = np.flatnonzero(img.pixels.reshape(-1, 3).any(axis=1))
    assert lit.size == 3


def test_diagnostics_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_diagnostics([(0, np.zeros((2, 2)))], blocker / "sub")
