import numpy as np
import pytest
from PIL import Image

from curbprice.data import ROLES, SplitSpec, load_houses_dataset, load_image_rgb, \
    load_tabular_csv, part_sizes, split
from curbprice.errors import ConfigError, DataError

rng = np.random.default_rng(99)


def write_houses(root, rows, skip=()):
    """rows: list of (bed, bath, area, zip, price); skip: (house_id, role) pairs."""
    lines = []
    for i, row in enumerate(rows, start=1):
        lines.append(" ".join(str(v) for v in row) + "\n")
        for role in ROLES:
            if (i, role) in skip:
                continue
            img = Image.fromarray(rng.integers(0, 255, (8, 8, 3), dtype=np.uint8))
            img.save(root / f"{i}_{role}.png")
    (root / "HousesInfo.txt").write_text("".join(lines))


class TestHousesLoader:
    def test_loads_and_binds_all_roles(self, tmp_path):
        write_houses(tmp_path, [(3, 2, 1500, 93446, 500000), (4, 3.5, 2200, 92200, 750000)])
        recs = load_houses_dataset(tmp_path)
        assert len(recs) == 2
        assert recs[0].id == 1 and recs[1].bathrooms == 3.5
        assert all(recs[0].image_paths[r].exists() for r in ROLES)

    def test_missing_image_names_house_and_role(self, tmp_path):
        write_houses(tmp_path, [(3, 2, 1500, 93446, 500000)] * 7, skip={(7, "kitchen")})
        with pytest.raises(DataError, match="house 7.*kitchen"):
            load_houses_dataset(tmp_path)

    def test_malformed_row_cites_line(self, tmp_path):
        write_houses(tmp_path, [(3, 2, 1500, 93446, 500000)])
        info = tmp_path / "HousesInfo.txt"
        info.write_text(info.read_text() + "3 2 oops 93446 500000\n")
        for role in ROLES:
            img = Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8))
            img.save(tmp_path / f"2_{role}.png")
        with pytest.raises(DataError, match=":2"):
            load_houses_dataset(tmp_path)

    def test_invariant_violations_rejected(self, tmp_path):
        write_houses(tmp_path, [(0, 2, 1500, 93446, 500000)])
        with pytest.raises(DataError, match="bedrooms"):
            load_houses_dataset(tmp_path)

    def test_ambiguous_image_rejected(self, tmp_path):
        write_houses(tmp_path, [(3, 2, 1500, 93446, 500000)])
        img = Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8))
        img.save(tmp_path / "1_frontal.jpg")
        with pytest.raises(DataError, match="multiple"):
            load_houses_dataset(tmp_path)

    def test_load_idempotent(self, tmp_path):
        write_houses(tmp_path, [(3, 2, 1500, 93446, 500000), (2, 1, 900, 91010, 210000)])
        a = load_houses_dataset(tmp_path)
        b = load_houses_dataset(tmp_path)
        assert a == b

    def test_undecodable_image_signals(self, tmp_path):
        bad = tmp_path / "x.png"
        bad.write_bytes(b"not an image")
        with pytest.raises(DataError, match="x.png"):
            load_image_rgb(bad)


class TestTabularLoader:
    def test_csv_with_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,target\n1,2,3\n4,5,6\n")
        ds = load_tabular_csv(p)
        assert ds.feature_names == ["a", "b"]
        np.testing.assert_array_equal(ds.rows, [[1, 2], [4, 5]])
        np.testing.assert_array_equal(ds.targets, [3, 6])

    def test_whitespace_without_header(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1 2 3\n4 5 6\n")
        ds = load_tabular_csv(p)
        assert ds.feature_names == ["col0", "col1"]

    def test_named_target_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,price,b\n1,9,2\n3,8,4\n")
        ds = load_tabular_csv(p, target_column="price")
        np.testing.assert_array_equal(ds.targets, [9, 8])
        assert ds.feature_names == ["a", "b"]

    def test_blank_cell_names_coordinates(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,\n")
        with pytest.raises(DataError, match="d.csv:2.*cell 2"):
            load_tabular_csv(p)

    def test_single_row_valid(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,3\n")
        ds = load_tabular_csv(p)
        assert ds.rows.shape == (1, 2)

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,c\n1,2,3\n1,2\n")
        with pytest.raises(DataError, match=":3"):
            load_tabular_csv(p)


class TestSplit:
    def test_paper_sizes_80_20(self):
        assert part_sizes(535, (0.8, 0.2)) == [428, 107]

    def test_pinned_70_15_15(self):
        assert part_sizes(535, (0.7, 0.15, 0.15)) == [375, 80, 80]

    def test_deterministic_per_seed(self):
        a = split(100, SplitSpec((0.8, 0.2), seed=5))
        b = split(100, SplitSpec((0.8, 0.2), seed=5))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        c = split(100, SplitSpec((0.8, 0.2), seed=6))
        assert not np.array_equal(a[0], c[0])

    def test_disjoint_exhaustive_random_cases(self):
        for _ in range(100):
            n = int(rng.integers(3, 400))
            k = int(rng.integers(2, 4))
            fracs = rng.dirichlet(np.ones(k))
            if any(f < 0.05 for f in fracs):
                continue
            spec = SplitSpec(tuple(fracs / fracs.sum()), seed=int(rng.integers(1 << 30)))
            try:
                parts = split(n, spec)
            except DataError:
                assert any(s < 1 for s in part_sizes(n, spec.fractions))
                continue
            alls = np.concatenate(parts)
            assert len(alls) == n and len(np.unique(alls)) == n

    def test_bad_fractions_rejected(self):
        with pytest.raises(ConfigError):
            SplitSpec((0.8, 0.3))
        with pytest.raises(ConfigError):
            SplitSpec((1.0, 0.0))
        with pytest.raises(ConfigError):
            SplitSpec((0.5, 0.3, 0.1, 0.1))

    def test_impossible_sizes_rejected(self):
        with pytest.raises(DataError):
            split(2, SplitSpec((0.7, 0.15, 0.15)))

    def test_scheme_consistency(self):
        assert SplitSpec((0.8, 0.2)).scheme == "train_test"
        assert SplitSpec((0.7, 0.15, 0.15)).scheme == "train_val_test"
        with pytest.raises(ConfigError):
            SplitSpec((0.8, 0.2), scheme="train_val_test")
