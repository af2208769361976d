"""Per-house feature assembly and min-max normalization.

A raw vector is the four textual attributes followed by the four images'
descriptor blocks in a fixed role order, strongest keypoints first, padded
with zeros when an image yields fewer keypoints than requested. The
normalizer rescales every dimension to [0, 1] using training-set extrema
(z = (x - min) / (max - min)) and is the only scaling step in the pipeline.
"""

import json
from dataclasses import dataclass

import numpy as np

from .data import ROLES, HouseRecord
from .errors import DataError, DimensionError, FitError

__all__ = [
    "DESCRIPTOR_DIM",
    "RawFeatureVector",
    "Normalizer",
    "assemble",
    "fit_normalizer",
    "normalize",
    "denormalize_target",
]

DESCRIPTOR_DIM = 64
TEXTUAL_FIELDS = ("bedrooms", "bathrooms", "area", "zipcode")


@dataclass
class RawFeatureVector:
    """One house's unnormalized features plus a human-readable layout."""

    house_id: int
    values: np.ndarray
    layout: list


def assemble(house: HouseRecord, per_image_points, n: int) -> RawFeatureVector:
    """Concatenate textual attributes with n descriptors per role image.

    ``per_image_points`` holds one strongest-first keypoint list per role in
    ROLES order; each list is truncated to n and zero-padded when shorter.
    n = 0 produces the textual-only vector of length 4.
    """
    if n < 0:
        raise DataError(f"feature count must be >= 0, got {n}")
    if len(per_image_points) != len(ROLES):
        raise DataError(
            f"house {house.id}: expected {len(ROLES)} keypoint lists "
            f"({', '.join(ROLES)}), got {len(per_image_points)}")
    parts = [np.array([house.bedrooms, house.bathrooms, house.area, house.zipcode],
                      dtype=np.float64)]
    layout = list(TEXTUAL_FIELDS)
    for role, points in zip(ROLES, per_image_points):
        block = np.zeros(n * DESCRIPTOR_DIM)
        for k, p in enumerate(points[:n]):
            if p.descriptor is None:
                raise DataError(f"house {house.id}: {role} keypoint {k} has no descriptor")
            if p.descriptor.shape != (DESCRIPTOR_DIM,):
                raise DimensionError(
                    f"house {house.id}: {role} keypoint {k} descriptor has shape "
                    f"{p.descriptor.shape}, expected ({DESCRIPTOR_DIM},)")
            block[k * DESCRIPTOR_DIM:(k + 1) * DESCRIPTOR_DIM] = p.descriptor
        parts.append(block)
        layout.extend(f"{role}[{k}]" for k in range(n))
    return RawFeatureVector(house_id=house.id, values=np.concatenate(parts), layout=layout)


@dataclass
class Normalizer:
    """Per-dimension training extrema; constant dimensions map to 0."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def dim(self) -> int:
        return self.mins.size

    @property
    def constant(self) -> np.ndarray:
        return self.maxs == self.mins

    def to_json(self) -> str:
        return json.dumps({
            "format": "minmax-normalizer/1",
            "dim": int(self.dim),
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "constant": self.constant.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Normalizer":
        doc = json.loads(text)
        if doc.get("format") != "minmax-normalizer/1":
            raise DataError(f"unsupported normalizer document: {doc.get('format')!r}")
        return cls(mins=np.asarray(doc["mins"], dtype=np.float64),
                   maxs=np.asarray(doc["maxs"], dtype=np.float64))


def fit_normalizer(training_vectors) -> Normalizer:
    """Column-wise min/max over training rows only (never the test set)."""
    X = np.asarray(training_vectors, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.size == 0 or X.shape[0] < 2:
        raise FitError(f"need at least 2 training vectors, got {0 if X.size == 0 else X.shape[0]}")
    if not np.isfinite(X).all():
        raise DataError("non-finite values in training vectors")
    return Normalizer(mins=X.min(axis=0), maxs=X.max(axis=0))


def normalize(nrm: Normalizer, v) -> np.ndarray:
    """z = (x - min) / (max - min), clamped to [0, 1]; accepts a vector or matrix."""
    x = np.asarray(v, dtype=np.float64)
    if x.shape[-1] != nrm.dim:
        raise DimensionError(f"vector has {x.shape[-1]} dims, normalizer fitted on {nrm.dim}")
    span = nrm.maxs - nrm.mins
    safe = np.where(nrm.constant, 1.0, span)
    z = (x - nrm.mins) / safe
    z = np.where(nrm.constant, 0.0, z)
    return np.clip(z, 0.0, 1.0)


def denormalize_target(nrm: Normalizer, z):
    """Inverse scaling x = z * (max - min) + min for a 1-dimensional normalizer."""
    if nrm.dim != 1:
        raise DimensionError(f"target normalizer must be 1-dimensional, got {nrm.dim}")
    if nrm.constant[0]:
        raise FitError("target range is constant; denormalization undefined")
    z = np.asarray(z, dtype=np.float64)
    out = z * (nrm.maxs[0] - nrm.mins[0]) + nrm.mins[0]
    return float(out) if out.ndim == 0 else out
