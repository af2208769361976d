"""Synthetic stand-in datasets with a known image-content -> price link.

The houses generator writes the standard on-disk layout (four PNGs per house
plus the attribute file). Every image carries ring motifs whose core/outer
radius ratio encodes a latent quality q in [0, 1]; the price mixes q
multiplicatively with the area, so part of the price is only recoverable
from the images. Ring motifs are radially symmetric on purpose: descriptors
of symmetric patches barely depend on the assigned orientation, which keeps
the visual encoding stable under the oriented descriptor path.

The tabular generator produces a benchmark-shaped numeric dataset
(506 rows x 13 features by default) whose target is a smooth nonlinear
function of a few latent factors plus calibrated noise.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .data import ROLES, TabularDataset

__all__ = [
    "SynthHouse",
    "write_synthetic_houses",
    "synthetic_tabular",
    "write_synthetic_tabular_csv",
]

_BG = 125
_CORE = 45
_RING = 225

_ZIPCODES = (91010, 92200, 93446, 94016, 95014, 96150)


@dataclass
class SynthHouse:
    id: int
    quality: float
    bedrooms: int
    bathrooms: int
    area: int
    zipcode: int
    price: int


def _render_ring_image(rng, size, quality, n_side):
    """Gray image with a jittered n_side x n_side grid of ring motifs.

    Each motif is a bright ring with a dark core; core radius is
    (0.38 + 0.42 * quality) of the outer radius, so the radial profile (not
    the motif size, position, or contrast) carries the quality signal.
    """
    img = np.full((size, size), float(_BG))
    yy, xx = np.mgrid[0:size, 0:size]
    # Core radii below ~2.7 px fall under the detector's octave-1 floor, so
    # the ratio range starts high enough that every quality level stays
    # detectable; scale grows with quality but stays within the descriptor's
    # ~14.2 * scale border clearance given the margin below.
    ratio = 0.38 + 0.42 * quality
    margin = size * 0.30
    centers = np.linspace(margin, size - margin, n_side)
    for cy in centers:
        for cx in centers:
            cyj = cy + rng.uniform(-3, 3)
            cxj = cx + rng.uniform(-3, 3)
            outer = rng.uniform(7.0, 10.5)
            core = ratio * outer
            dist = np.hypot(yy - cyj, xx - cxj)
            ring = np.clip(outer - dist + 0.5, 0.0, 1.0)
            img = img * (1.0 - ring) + _RING * ring
            hole = np.clip(core - dist + 0.5, 0.0, 1.0)
            img = img * (1.0 - hole) + _CORE * hole
    img += rng.normal(0.0, 1.5, img.shape)
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def write_synthetic_houses(root, n_houses: int = 96, image_size: int = 192,
                           seed: int = 0, motifs_per_side: int = 3) -> list[SynthHouse]:
    """Write PNGs + HousesInfo.txt under root; returns the generating latents.

    price = 60000 + 840000 * q * (0.35 + 0.65 * area_factor) + noise, so the
    textual attributes alone explain only part of the variance and the
    quality latent q (visible only through the ring motifs) carries the rest,
    interacting multiplicatively with area.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    houses = []
    lines = []
    for house_id in range(1, n_houses + 1):
        q = rng.uniform(0.05, 0.95)
        area_factor = rng.uniform(0.0, 1.0)
        house = SynthHouse(
            id=house_id,
            quality=float(q),
            bedrooms=int(rng.integers(1, 7)),
            bathrooms=int(rng.integers(1, 5)),
            area=int(800 + round(3400 * area_factor)),
            zipcode=int(rng.choice(_ZIPCODES)),
            price=max(22000, int(round(
                60000 + 840000 * q * (0.35 + 0.65 * area_factor)
                + rng.normal(0.0, 5000.0)))),
        )
        houses.append(house)
        for role in ROLES:
            img = _render_ring_image(rng, image_size, q, motifs_per_side)
            Image.fromarray(img).convert("RGB").save(root / f"{house_id}_{role}.png")
        lines.append(f"{house.bedrooms} {house.bathrooms} {house.area} "
                     f"{house.zipcode} {house.price}\n")
    (root / "HousesInfo.txt").write_text("".join(lines))
    return houses


def synthetic_tabular(n_rows: int = 506, n_features: int = 13, seed: int = 0,
                      noise: float = 0.15) -> TabularDataset:
    """Benchmark-shaped numeric dataset with a smooth nonlinear target.

    Four latent factors drive both the features (noisy monotone views at
    assorted scales) and the target; remaining features are distractors.
    The default noise level leaves roughly 95% of the target variance
    explainable, so a small well-trained network lands near R = 0.95.
    """
    if n_features < 6:
        raise ValueError(f"need at least 6 features, got {n_features}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_rows, 4))
    cols = [
        6.0 + 2.0 * z[:, 0] + 0.4 * rng.standard_normal(n_rows),
        40.0 + 9.0 * z[:, 1] + 1.5 * rng.standard_normal(n_rows),
        3.0 + np.abs(z[:, 2]) + 0.2 * rng.standard_normal(n_rows),
        0.5 + 0.1 * z[:, 3] + 0.02 * rng.standard_normal(n_rows),
        12.0 + 3.0 * (z[:, 0] + z[:, 1]) + 0.8 * rng.standard_normal(n_rows),
        200.0 + 35.0 * z[:, 2] - 20.0 * z[:, 3] + 6.0 * rng.standard_normal(n_rows),
    ]
    while len(cols) < n_features:
        k = len(cols)
        cols.append(rng.uniform(0, 10 * (k + 1), n_rows))
    X = np.column_stack(cols[:n_features])
    y = (22.0
         + 6.0 * np.tanh(z[:, 0])
         + 4.5 / (1.0 + np.exp(-1.5 * z[:, 1]))
         + 1.0 * z[:, 2] * z[:, 3]
         + 1.5 * z[:, 3]
         + noise * rng.standard_normal(n_rows) * 7.0)
    names = [f"f{j + 1:02d}" for j in range(n_features)]
    return TabularDataset(feature_names=names, rows=X, targets=y,
                          provenance=f"synthetic-tabular(seed={seed})")


def write_synthetic_tabular_csv(path, **kwargs) -> TabularDataset:
    """Materialize synthetic_tabular as a CSV with header + target column."""
    ds = synthetic_tabular(**kwargs)
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(ds.feature_names + ["target"]) + "\n")
        for row, t in zip(ds.rows, ds.targets):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(t)!r}\n")
    return ds
