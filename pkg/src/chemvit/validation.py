"""Input validation helpers shared by the estimator wrappers and CLI."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def check_rgb_image(image, name: str = "image") -> np.ndarray:
    """Require an (H, W, 3) uint8 array (or something safely castable)."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(f"{name}: expected shape (H, W, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ShapeError(f"{name}: expected 8-bit integer pixels, got {arr.dtype}")
        if arr.min() < 0 or arr.max() > 255:
            raise ShapeError(f"{name}: integer pixels outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def check_image_batch(X) -> list[np.ndarray]:
    """Accept a list of images or one (N, H, W, 3) array."""
    if isinstance(X, np.ndarray) and X.ndim == 4:
        return [check_rgb_image(X[i], f"image {i}") for i in range(X.shape[0])]
    if isinstance(X, (list, tuple)):
        return [check_rgb_image(img, f"image {i}") for i, img in enumerate(X)]
    raise ShapeError("expected a list of RGB images or an (N, H, W, 3) array")


def check_smiles_batch(X) -> list[str]:
    if isinstance(X, str):
        raise ShapeError("expected a sequence of SMILES strings, got one string")
    items = list(X)
    for pos, item in enumerate(items):
        if not isinstance(item, str):
            raise ShapeError(f"element {pos} is not a string")
    return items
