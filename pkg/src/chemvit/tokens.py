"""Token-set, attention-workspace and per-layer trace data types."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class TokenSet:
    """Live visual tokens in one encoder pass.

    `sizes[i]` is the number of original patches token i stands for, and
    `origins[i]` the set of their patch indices. When `has_cls` the CLS
    token sits at row 0 with size 1 and empty origins. `pruned_origins`
    accumulates patches discarded by pruning, so
    sum(|origins|) + |pruned_origins| always equals the initial patch count.
    """

    features: np.ndarray                      # (n, d) float64
    sizes: np.ndarray                         # (n,) int64
    origins: tuple[frozenset[int], ...]
    has_cls: bool
    pruned_origins: frozenset[int] = field(default_factory=frozenset)

    @property
    def num_tokens(self) -> int:
        return self.features.shape[0]

    @property
    def num_patch_tokens(self) -> int:
        return self.num_tokens - (1 if self.has_cls else 0)

    @property
    def patch_offset(self) -> int:
        return 1 if self.has_cls else 0

    @property
    def patch_features(self) -> np.ndarray:
        return self.features[self.patch_offset:]

    @property
    def original_patch_count(self) -> int:
        return sum(len(o) for o in self.origins) + len(self.pruned_origins)

    def validate(self) -> None:
        n = self.num_tokens
        if self.sizes.shape != (n,) or len(self.origins) != n:
            raise ShapeError("sizes/origins length does not match token count")
        if np.any(self.sizes < 1):
            raise ShapeError("all token sizes must be >= 1")
        if self.has_cls and self.sizes[0] != 1:
            raise ShapeError("CLS token must keep size 1")
        if not np.all(np.isfinite(self.features)):
            raise ShapeError("token features contain non-finite entries")

    def select(self, indices: np.ndarray) -> "TokenSet":
        """New TokenSet keeping only `indices` (token-row indices, in order)."""
        return replace(
            self,
            features=self.features[indices],
            sizes=self.sizes[indices],
            origins=tuple(self.origins[i] for i in indices),
        )


@dataclass(frozen=True)
class AttentionWorkspace:
    """Per-head Q/K/V and the row-stochastic attention actually applied."""

    q: np.ndarray          # (heads, n, head_dim)
    k: np.ndarray          # (heads, n, head_dim)
    v: np.ndarray          # (heads, n, head_dim)
    attention: np.ndarray  # (heads, n, n), rows sum to 1

    def validate(self, tol: float = 1e-6) -> None:
        a = self.attention
        if np.any(a < -tol) or np.any(a > 1 + tol):
            raise ShapeError("attention entries outside [0, 1]")
        row_sums = a.sum(axis=-1)
        if np.any(np.abs(row_sums - 1.0) > tol):
            raise ShapeError("attention rows do not sum to 1")


@dataclass
class LayerTrace:
    """Reduction telemetry for one encoder block.

    Token counts include the CLS token when present. `policy` is "none"
    when the schedule required no removal (or reduction was disabled);
    `score_variance` is None when no score was computed.
    """

    layer_index: int
    tokens_in: int
    tokens_out: int
    score_variance: Optional[float]
    policy: str
    attention_flops: int = 0
    ffn_flops: int = 0

    def to_record(self) -> dict:
        return {
            "layer_index": self.layer_index,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "score_variance": self.score_variance,
            "policy": self.policy,
            "attention_flops": self.attention_flops,
            "ffn_flops": self.ffn_flops,
        }
