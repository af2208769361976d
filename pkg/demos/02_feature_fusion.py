"""
Fusing photos with attributes
=============================

Shows how four room photos and four textual attributes become one numeric
row: cached descriptor extraction, strongest-n selection, concatenation, and
min-max normalization fitted on training rows only.
"""

import tempfile
from pathlib import Path

from curbprice.data import load_houses_dataset
from curbprice.fusion import assemble, fit_normalizer, normalize
from curbprice.pipeline import Settings, assemble_matrix, extract_features, \
    _points_from_arrays
from curbprice.surf import SurfParams
from curbprice.synth import write_synthetic_houses

ROLES = ("frontal", "bedroom", "kitchen", "bathroom")

# --- 1. Corpus and cached extraction -----------------------------------------
root = Path(tempfile.mkdtemp(prefix="houses_"))
cache = Path(tempfile.mkdtemp(prefix="cache_"))
write_synthetic_houses(root, n_houses=6, seed=11)
records = load_houses_dataset(root)

params = SurfParams()  # the pipeline derives this from Settings in real runs
features, stats = extract_features(records, params, cache)
print(f"first pass:  {stats.computed} images computed, {stats.hits} cache hits")
features, stats = extract_features(records, params, cache)
print(f"second pass: {stats.computed} images computed, {stats.hits} cache hits")

# --- 2. One house's fused vector ---------------------------------------------
# n descriptors per room photo, strongest first, zero-padded when a photo has
# fewer; n = 0 keeps only the four textual attributes.
house = records[0]
per_image = [_points_from_arrays(features[house.id][role]) for role in ROLES]
for n in (0, 2):
    vec = assemble(house, per_image, n)
    print(f"\nn = {n}: vector length {vec.values.size}")
    print(f"  layout: {vec.layout[:6]}{' ...' if len(vec.layout) > 6 else ''}")

# --- 3. Whole-corpus design matrix and normalization ------------------------
X, y = assemble_matrix(records, features, n=2)
print(f"\ndesign matrix {X.shape[0]} x {X.shape[1]}, "
      f"prices ${y.min():,.0f} .. ${y.max():,.0f}")

# The normalizer memorizes per-column training extrema; training rows then
# span exactly [0, 1] and unseen rows are clamped into it.
nrm = fit_normalizer(X[:4])
Z = normalize(nrm, X)
print(f"normalized training block range: [{Z[:4].min():.1f}, {Z[:4].max():.1f}]")
print(f"normalized held-out block range: [{Z[4:].min():.1f}, {Z[4:].max():.1f}]")
