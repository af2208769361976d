"""
From pixels to descriptors
==========================

Walks one synthetic house photo through the whole image pipeline: grayscale
conversion, histogram equalization, the integral image, interest-point
detection, and descriptor computation.
"""

import tempfile
from pathlib import Path

import numpy as np

from curbprice.data import load_houses_dataset, load_image_rgb
from curbprice.imgproc import equalize_histogram, integral_image, to_grayscale
from curbprice.surf import SurfParams, detect_and_describe, strongest_n
from curbprice.synth import write_synthetic_houses

# --- 1. Make a tiny corpus to play with ------------------------------------
# Each house gets four room photos whose ring motifs encode a hidden quality
# latent, plus textual attributes and a price in HousesInfo.txt.
root = Path(tempfile.mkdtemp(prefix="houses_"))
write_synthetic_houses(root, n_houses=4, seed=7)
records = load_houses_dataset(root)
house = records[0]
print(f"loaded {len(records)} houses from {root}")
print(f"house {house.id}: {house.bedrooms:.0f} bed / {house.bathrooms:.0f} bath, "
      f"{house.area:.0f} sqft, zip {house.zipcode}, ${house.price:,.0f}")

# --- 2. Grayscale and equalization ------------------------------------------
rgb = load_image_rgb(house.image_paths["frontal"])
gray = to_grayscale(rgb)
eq = equalize_histogram(gray)
print(f"\nfrontal image: {rgb.shape[1]}x{rgb.shape[0]} RGB -> grayscale "
      f"range [{gray.min()}, {gray.max()}] -> equalized range [{eq.min()}, {eq.max()}]")

# --- 3. The integral image makes any box sum four lookups -------------------
ii = integral_image(eq)
print(f"integral image corner value (= total mass): {ii[-1, -1]:,}")

# --- 4. Detect blobs and describe them ---------------------------------------
# The detector scores each location/scale with a box-filter Hessian
# determinant; the describer attaches an orientation and a 64-dimensional
# gradient-histogram vector to every surviving point.
kept, dropped = detect_and_describe(ii, SurfParams())
print(f"\ndetected {len(kept)} interest points "
      f"({len(dropped)} dropped near the border)")
for p in strongest_n(kept, 3):
    print(f"  ({p.x:6.1f}, {p.y:6.1f})  scale {p.scale:4.2f}  "
          f"response {p.response:8.1f}  |descriptor| = "
          f"{np.linalg.norm(p.descriptor):.6f}")

# Descriptors are unit vectors, so the dot product of two of them is a
# similarity in [-1, 1]; nearby motifs of equal size look almost identical.
if len(kept) >= 2:
    a, b = strongest_n(kept, 2)
    print(f"\nsimilarity of two strongest descriptors: "
          f"{float(a.descriptor @ b.descriptor):.3f}")
