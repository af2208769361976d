"""Dataset ingestion and reproducible splitting.

Two input shapes are supported: the houses layout (a directory of images named
``<id>_<role>.<ext>`` plus one whitespace-delimited attribute file with rows
``bedrooms bathrooms area zipcode price``), and generic numeric delimited
files for textual-only experiments.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, DataError

__all__ = [
    "ROLES",
    "HouseRecord",
    "TabularDataset",
    "SplitSpec",
    "load_houses_dataset",
    "load_image_rgb",
    "load_tabular_csv",
    "split",
]

ROLES = ("frontal", "bedroom", "kitchen", "bathroom")

_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass
class HouseRecord:
    """One sample: four room photos plus textual attributes and the price."""

    id: int
    image_paths: dict
    bedrooms: float
    bathrooms: float
    area: float
    zipcode: int
    price: float

    def validate(self):
        for role in ROLES:
            if role not in self.image_paths:
                raise DataError(f"house {self.id}: missing {role} image")
        if self.price <= 0:
            raise DataError(f"house {self.id}: price must be positive, got {self.price}")
        if self.area <= 0:
            raise DataError(f"house {self.id}: area must be positive, got {self.area}")
        if self.bedrooms < 1:
            raise DataError(f"house {self.id}: bedrooms must be >= 1, got {self.bedrooms}")
        if self.bathrooms < 1:
            raise DataError(f"house {self.id}: bathrooms must be >= 1, got {self.bathrooms}")


@dataclass
class TabularDataset:
    """Numeric feature matrix + target vector, e.g. the 506x13 housing benchmark."""

    feature_names: list
    rows: np.ndarray
    targets: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] != self.targets.shape[0]:
            raise DataError("rows and targets must agree on sample count")


def _find_attribute_file(root: Path) -> Path:
    preferred = root / "HousesInfo.txt"
    if preferred.is_file():
        return preferred
    candidates = sorted(root.glob("*.txt"))
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise DataError(f"no attribute .txt file found in {root}")
    raise DataError(f"ambiguous attribute files in {root}: {[c.name for c in candidates]}")


def _bind_image(root: Path, house_id: int, role: str) -> Path:
    hits = [p for p in root.glob(f"{house_id}_{role}.*") if p.suffix.lower() in _IMAGE_EXTS]
    if not hits:
        raise DataError(f"house {house_id}: missing {role} image file in {root}")
    if len(hits) > 1:
        raise DataError(
            f"house {house_id}: multiple {role} image files: {[h.name for h in hits]}")
    return hits[0]


def load_houses_dataset(root) -> list[HouseRecord]:
    """Parse the attribute file and bind the four role images per house.

    House ids start at 1 and follow attribute-file row order. Every record is
    validated (positive price/area, at least one bed/bath, all four images on
    disk); the first violation aborts the load with a message naming the house.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    attr_path = _find_attribute_file(root)
    records = []
    with open(attr_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise DataError(
                    f"{attr_path.name}:{lineno}: expected 5 fields "
                    f"(bedrooms bathrooms area zipcode price), got {len(parts)}")
            try:
                bedrooms, bathrooms, area = (float(parts[0]), float(parts[1]), float(parts[2]))
                zipcode = int(float(parts[3]))
                price = float(parts[4])
            except ValueError as exc:
                raise DataError(f"{attr_path.name}:{lineno}: non-numeric field ({exc})") from exc
            house_id = len(records) + 1
            rec = HouseRecord(
                id=house_id,
                image_paths={role: _bind_image(root, house_id, role) for role in ROLES},
                bedrooms=bedrooms,
                bathrooms=bathrooms,
                area=area,
                zipcode=zipcode,
                price=price,
            )
            rec.validate()
            records.append(rec)
    if not records:
        raise DataError(f"{attr_path} contains no rows")
    return records


def load_image_rgb(path) -> np.ndarray:
    """Decode an image file to an (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc


def load_tabular_csv(path, target_column=-1) -> TabularDataset:
    """Load a comma- or whitespace-delimited numeric file, one target column.

    A first row with any non-numeric token is treated as the header. Any
    missing or non-numeric cell aborts with its (row, column) coordinates.
    ``target_column`` may be a column name or an index (default: last column).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        sample = fh.read()
    if not sample.strip():
        raise DataError(f"{path} is empty")
    delimiter = "," if "," in sample.splitlines()[0] else None
    raw_rows = []
    for lineno, line in enumerate(sample.splitlines(), start=1):
        if not line.strip():
            continue
        cells = next(csv.reader([line])) if delimiter == "," else line.split()
        raw_rows.append((lineno, [c.strip() for c in cells]))

    def numeric(cell):
        try:
            return float(cell)
        except ValueError:
            return None

    first_cells = raw_rows[0][1]
    has_header = any(numeric(c) is None for c in first_cells)
    if has_header:
        names = first_cells
        raw_rows = raw_rows[1:]
    else:
        names = [f"col{j}" for j in range(len(first_cells))]
    if not raw_rows:
        raise DataError(f"{path} has a header but no data rows")

    n_cols = len(names)
    data = np.empty((len(raw_rows), n_cols))
    for i, (lineno, cells) in enumerate(raw_rows):
        if len(cells) != n_cols:
            raise DataError(f"{path.name}:{lineno}: expected {n_cols} cells, got {len(cells)}")
        for j, cell in enumerate(cells):
            val = numeric(cell)
            if val is None or not np.isfinite(val):
                raise DataError(
                    f"{path.name}:{lineno}: cell {j + 1} ({names[j]}) is not numeric: {cell!r}")
            data[i, j] = val

    if isinstance(target_column, str):
        if target_column not in names:
            raise DataError(f"target column {target_column!r} not in {names}")
        t_idx = names.index(target_column)
    else:
        t_idx = int(target_column) % n_cols
    keep = [j for j in range(n_cols) if j != t_idx]
    return TabularDataset(
        feature_names=[names[j] for j in keep],
        rows=data[:, keep],
        targets=data[:, t_idx],
        provenance=str(path),
    )


@dataclass
class SplitSpec:
    """Seeded partition into ordered fractions (train/test or train/val/test)."""

    fractions: tuple
    seed: int = 0
    scheme: str = field(default="")

    def __post_init__(self):
        self.fractions = tuple(float(f) for f in self.fractions)
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"fractions must sum to 1, got {sum(self.fractions)}")
        if any(f <= 0 for f in self.fractions):
            raise ConfigError("every fraction must be positive")
        inferred = {2: "train_test", 3: "train_val_test"}.get(len(self.fractions))
        if inferred is None:
            raise ConfigError("expected 2 or 3 fractions")
        if not self.scheme:
            self.scheme = inferred
        elif self.scheme != inferred:
            raise ConfigError(f"scheme {self.scheme!r} does not match {len(self.fractions)} fractions")


def part_sizes(n: int, fractions) -> list[int]:
    """Largest-remainder rounding of n * fractions; always sums to n.

    Ties between equal remainders resolve to the earlier part, so
    (0.7, 0.15, 0.15) at n = 535 is pinned to (375, 80, 80).
    """
    exact = [n * f for f in fractions]
    sizes = [int(np.floor(e)) for e in exact]
    leftovers = sorted(
        range(len(fractions)),
        key=lambda j: (-(exact[j] - sizes[j]), j),
    )
    for j in leftovers[: n - sum(sizes)]:
        sizes[j] += 1
    return sizes


def split(n: int, spec: SplitSpec) -> list[np.ndarray]:
    """Disjoint, exhaustive index arrays for each fraction, seeded and stable."""
    if n < len(spec.fractions):
        raise DataError(f"cannot split {n} samples into {len(spec.fractions)} parts")
    sizes = part_sizes(n, spec.fractions)
    if any(s < 1 for s in sizes):
        raise DataError(f"split sizes {sizes} include an empty part for n={n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    out = []
    start = 0
    for s in sizes:
        out.append(np.sort(perm[start:start + s]))
        start += s
    return out
