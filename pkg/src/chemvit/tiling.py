"""Dynamic-resolution preprocessing: square tile grids plus a thumbnail,
and the space-to-depth (pixel shuffle) rearrangement."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from .errors import ShapeError
from .tokens import TokenSet

TILE_SIDE = 448


@dataclass(frozen=True)
class TilingPlan:
    grid_rows: int
    grid_cols: int
    tile_side: int
    include_thumbnail: bool
    tile_boxes: tuple[tuple[int, int, int, int], ...]  # (left, top, right, bottom)

    @property
    def num_tiles(self) -> int:
        """Grid tiles plus the thumbnail when present."""
        return self.grid_rows * self.grid_cols + (1 if self.include_thumbnail else 0)


def plan_tiles(width: int, height: int, max_tiles: int = 12,
               tile_side: int = TILE_SIDE) -> TilingPlan:
    """Pick the (rows, cols) grid, 1 <= rows*cols <= max_tiles, whose aspect
    ratio cols/rows is closest to width/height. On a tie the larger grid wins
    only while the image still has more than half the grid's pixel capacity;
    remaining ties go to the earlier candidate (smaller area, then fewer
    rows). A thumbnail is appended whenever the grid has more than one tile.
    """
    if width < 1 or height < 1 or max_tiles < 1:
        raise ShapeError("width, height and max_tiles must be positive")
    aspect = width / height
    candidates = sorted(
        ((rows, cols) for rows in range(1, max_tiles + 1)
         for cols in range(1, max_tiles // rows + 1)),
        key=lambda rc: (rc[0] * rc[1], rc[0]),
    )
    best = (1, 1)
    best_diff = float("inf")
    for rows, cols in candidates:
        diff = abs(aspect - cols / rows)
        if diff < best_diff:
            best_diff = diff
            best = (rows, cols)
        elif diff == best_diff:
            if width * height > 0.5 * tile_side * tile_side * rows * cols:
                best = (rows, cols)
    rows, cols = best
    boxes = tuple(
        (c * tile_side, r * tile_side, (c + 1) * tile_side, (r + 1) * tile_side)
        for r in range(rows) for c in range(cols)
    )
    return TilingPlan(grid_rows=rows, grid_cols=cols, tile_side=tile_side,
                      include_thumbnail=rows * cols > 1, tile_boxes=boxes)


def _resize(image: np.ndarray, width: int, height: int) -> np.ndarray:
    if image.shape[0] == height and image.shape[1] == width:
        return image
    pil = Image.fromarray(image)
    return np.asarray(pil.resize((width, height), Image.BILINEAR))


def extract_tiles(image: np.ndarray, plan: TilingPlan) -> list[np.ndarray]:
    """Bilinear-resize the image to the grid footprint, cut the tiles
    row-major, and append the whole-image thumbnail last when planned.
    `image` is an (H, W, 3) uint8 array."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ShapeError("expected an 8-bit RGB image of shape (H, W, 3)")
    side = plan.tile_side
    canvas = _resize(image, plan.grid_cols * side, plan.grid_rows * side)
    tiles = [canvas[top:bottom, left:right].copy()
             for left, top, right, bottom in plan.tile_boxes]
    if plan.include_thumbnail:
        tiles.append(_resize(image, side, side).copy())
    return tiles


def pixel_shuffle(tokens: TokenSet, factor: int) -> TokenSet:
    """Space-to-depth on an unreduced patch grid: each factor x factor block
    becomes one token with the block's features concatenated row-major.
    Valid only for CLS-free token sets fresh from patch embedding."""
    if factor < 1:
        raise ShapeError("factor must be >= 1")
    if factor == 1:
        return tokens
    if tokens.has_cls:
        raise ShapeError("pixel shuffle is undefined for CLS-bearing token sets")
    n = tokens.num_tokens
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise ShapeError("token count is not a square grid")
    unreduced = (
        not tokens.pruned_origins
        and np.all(tokens.sizes == 1)
        and all(o == frozenset((i,)) for i, o in enumerate(tokens.origins))
    )
    if not unreduced:
        raise ShapeError("pixel shuffle requires an unreduced token grid")
    if side % factor != 0:
        raise ShapeError(f"grid side {side} not divisible by factor {factor}")
    d = tokens.features.shape[1]
    grid = tokens.features.reshape(side, side, d)
    out_side = side // factor
    blocks = grid.reshape(out_side, factor, out_side, factor, d)
    features = blocks.transpose(0, 2, 1, 3, 4).reshape(out_side * out_side,
                                                       factor * factor * d)
    origins = []
    for r in range(out_side):
        for c in range(out_side):
            members = frozenset(
                (r * factor + i) * side + (c * factor + j)
                for i in range(factor) for j in range(factor))
            origins.append(members)
    sizes = np.full(out_side * out_side, factor * factor, dtype=np.int64)
    return replace(tokens, features=features, sizes=sizes, origins=tuple(origins))
