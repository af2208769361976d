import numpy as np
import pytest

from curbprice.data import ROLES, load_houses_dataset, load_image_rgb, load_tabular_csv
from curbprice.imgproc import equalize_histogram, integral_image, to_grayscale
from curbprice.surf import SurfParams, detect_and_describe
from curbprice.synth import synthetic_tabular, write_synthetic_houses, \
    write_synthetic_tabular_csv


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    houses = write_synthetic_houses(root, n_houses=10, seed=3)
    return root, houses


class TestHousesGenerator:
    def test_on_disk_layout_loads(self, corpus):
        root, houses = corpus
        recs = load_houses_dataset(root)
        assert len(recs) == 10
        for rec, house in zip(recs, houses):
            assert rec.id == house.id
            assert rec.price == house.price
            assert rec.area == house.area
            for role in ROLES:
                assert rec.image_paths[role].suffix == ".png"

    def test_price_floor_and_quality_link(self, corpus):
        _, houses = corpus
        assert all(h.price >= 22000 for h in houses)
        big = write_synthetic_houses_latents_only()
        q = np.array([h.quality for h in big])
        price = np.array([h.price for h in big], dtype=float)
        area = np.array([h.area for h in big], dtype=float)
        assert np.corrcoef(q, price)[0, 1] > 0.7
        qa = q * area
        assert np.corrcoef(qa, price)[0, 1] > np.corrcoef(area, price)[0, 1]

    def test_every_house_is_detectable(self, corpus):
        root, _ = corpus
        recs = load_houses_dataset(root)
        for rec in recs:
            total = 0
            for role in ROLES:
                img = load_image_rgb(rec.image_paths[role])
                ii = integral_image(equalize_histogram(to_grayscale(img)))
                kept, _ = detect_and_describe(ii, SurfParams())
                total += len(kept)
            assert total >= 4, f"house {rec.id} yields too few interest points"

    def test_quality_changes_pixels_only_through_profile(self, tmp_path):
        a = write_synthetic_houses(tmp_path / "a", n_houses=2, seed=5)
        b = write_synthetic_houses(tmp_path / "b", n_houses=2, seed=5)
        assert [h.price for h in a] == [h.price for h in b]
        pa = (tmp_path / "a" / "1_frontal.png").read_bytes()
        pb = (tmp_path / "b" / "1_frontal.png").read_bytes()
        assert pa == pb
        c = write_synthetic_houses(tmp_path / "c", n_houses=2, seed=6)
        assert (tmp_path / "c" / "1_frontal.png").read_bytes() != pa
        assert [h.price for h in c] != [h.price for h in a]


def write_synthetic_houses_latents_only():
    """Latents for a larger corpus without paying for image rendering."""
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        return write_synthetic_houses(tmp, n_houses=60, image_size=48,
                                      motifs_per_side=1, seed=11)


class TestTabularGenerator:
    def test_shape_and_determinism(self):
        ds = synthetic_tabular()
        assert ds.rows.shape == (506, 13)
        assert ds.targets.shape == (506,)
        assert np.isfinite(ds.rows).all() and np.isfinite(ds.targets).all()
        again = synthetic_tabular()
        np.testing.assert_array_equal(ds.rows, again.rows)
        np.testing.assert_array_equal(ds.targets, again.targets)
        other = synthetic_tabular(seed=1)
        assert not np.array_equal(ds.targets, other.targets)

    def test_noise_monotonically_obscures_target(self):
        clean = synthetic_tabular(noise=0.0)
        noisy = synthetic_tabular(noise=1.0)
        np.testing.assert_array_equal(clean.rows, noisy.rows)
        assert np.var(noisy.targets - clean.targets) > 0

    def test_csv_round_trip_exact(self, tmp_path):
        path = tmp_path / "bench.csv"
        ds = write_synthetic_tabular_csv(path, n_rows=40, seed=2)
        loaded = load_tabular_csv(path)
        np.testing.assert_array_equal(loaded.rows, ds.rows)
        np.testing.assert_array_equal(loaded.targets, ds.targets)
        assert loaded.feature_names == ds.feature_names

    def test_rejects_too_few_features(self):
        with pytest.raises(ValueError):
            synthetic_tabular(n_features=5)
