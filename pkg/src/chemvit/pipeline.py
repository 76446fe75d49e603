"""End-to-end helpers: tile an image, encode every tile, aggregate
telemetry, and benchmark reduced vs. unreduced pipelines."""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import EncoderConfig
from .encoder import Encoder, flops_estimate
from .errors import ConfigurationError
from .tiling import TilingPlan, extract_tiles, plan_tiles
from .tokens import LayerTrace, TokenSet

WORKERS_ENV = "CHEMVIT_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    if raw.strip():
        try:
            count = int(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from exc
        if count < 1:
            raise ConfigurationError(f"{WORKERS_ENV} must be >= 1")
        return count
    return min(4, os.cpu_count() or 1)


def normalize_image(image: np.ndarray) -> np.ndarray:
    """8-bit RGB to float64 in [0, 1]."""
    image = np.asarray(image)
    if image.dtype == np.uint8:
        return image.astype(np.float64) / 255.0
    return np.asarray(image, dtype=np.float64)


@dataclass
class TileEncoding:
    tokens: TokenSet
    traces: list[LayerTrace]


@dataclass
class ImageEncoding:
    plan: TilingPlan
    tiles: list[TileEncoding]
    raw_visual_tokens: int
    final_visual_tokens: int
    flops: int


def encode_image(image: np.ndarray, encoder: Encoder,
                 max_tiles: int = 12) -> ImageEncoding:
    """Tile an 8-bit RGB image and run the encoder on every tile
    (thumbnail included)."""
    image = np.asarray(image)
    cfg = encoder.cfg
    plan = plan_tiles(image.shape[1], image.shape[0], max_tiles=max_tiles,
                      tile_side=cfg.image_side)
    tiles = extract_tiles(image, plan)
    encoded = []
    for tile in tiles:
        tokens, traces = encoder.encode(normalize_image(tile))
        encoded.append(TileEncoding(tokens=tokens, traces=traces))
    raw = plan.num_tiles * cfg.num_patches
    final = sum(t.tokens.num_patch_tokens for t in encoded)
    flops = sum(flops_estimate(t.traces, cfg) for t in encoded)
    return ImageEncoding(plan=plan, tiles=encoded, raw_visual_tokens=raw,
                         final_visual_tokens=final, flops=flops)


def pooled_features(encoding: ImageEncoding) -> np.ndarray:
    """Size-weighted mean of the final patch-token features across tiles."""
    acc = None
    weight = 0
    for tile in encoding.tiles:
        tokens = tile.tokens
        off = tokens.patch_offset
        feats = tokens.features[off:]
        sizes = tokens.sizes[off:].astype(np.float64)
        part = (feats * sizes[:, None]).sum(axis=0)
        acc = part if acc is None else acc + part
        weight += float(sizes.sum())
    return acc / weight


@dataclass
class BenchRow:
    name: str
    tiles: int
    raw_visual_tokens: int
    final_visual_tokens: int
    flops_baseline: int
    flops_reduced: int
    wall_ms_baseline: float
    wall_ms_reduced: float


@dataclass
class BenchReport:
    rows: list[BenchRow]
    text_tokens: int

    @property
    def flop_ratio(self) -> float:
        return (sum(r.flops_baseline for r in self.rows)
                / sum(r.flops_reduced for r in self.rows))

    @property
    def wall_speedup(self) -> float:
        return (sum(r.wall_ms_baseline for r in self.rows)
                / sum(r.wall_ms_reduced for r in self.rows))

    @property
    def mean_raw_tokens(self) -> float:
        return float(np.mean([r.raw_visual_tokens for r in self.rows]))

    @property
    def mean_final_tokens(self) -> float:
        return float(np.mean([r.final_visual_tokens for r in self.rows]))

    @property
    def mean_total_tokens_baseline(self) -> float:
        return self.mean_raw_tokens + self.text_tokens

    @property
    def mean_total_tokens_reduced(self) -> float:
        return self.mean_final_tokens + self.text_tokens

    @property
    def total_token_ratio(self) -> float:
        return self.mean_total_tokens_baseline / self.mean_total_tokens_reduced


def bench_images(images: list[tuple[str, np.ndarray]], cfg: EncoderConfig,
                 text_tokens: int = 30, max_tiles: int = 12,
                 workers: int | None = None) -> BenchReport:
    """Run the unreduced and reduced pipelines on identical inputs.

    FLOP and token columns are deterministic; only wall times vary.
    Images are processed by a bounded worker pool; the report ordering
    follows the input ordering regardless of completion order.
    """
    if not images:
        raise ConfigurationError("bench needs at least one image")
    reduced_cfg = cfg if cfg.reduction.enabled else dataclasses.replace(
        cfg, reduction=dataclasses.replace(cfg.reduction, enabled=True))
    baseline_cfg = dataclasses.replace(
        cfg, reduction=dataclasses.replace(cfg.reduction, enabled=False))
    reduced_enc = Encoder(reduced_cfg)
    baseline_enc = Encoder(baseline_cfg)

    def one(item: tuple[str, np.ndarray]) -> BenchRow:
        name, image = item
        start = time.perf_counter()
        base = encode_image(image, baseline_enc, max_tiles)
        mid = time.perf_counter()
        redu = encode_image(image, reduced_enc, max_tiles)
        end = time.perf_counter()
        return BenchRow(
            name=name,
            tiles=base.plan.num_tiles,
            raw_visual_tokens=base.raw_visual_tokens,
            final_visual_tokens=redu.final_visual_tokens,
            flops_baseline=base.flops,
            flops_reduced=redu.flops,
            wall_ms_baseline=(mid - start) * 1e3,
            wall_ms_reduced=(end - mid) * 1e3,
        )

    count = workers if workers is not None else worker_count()
    if count <= 1:
        rows = [one(item) for item in images]
    else:
        with ThreadPoolExecutor(max_workers=count) as pool:
            rows = list(pool.map(one, images))
    return BenchReport(rows=rows, text_tokens=text_tokens)
