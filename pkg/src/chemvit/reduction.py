"""Attention-based token scoring, Top-K pruning, bipartite merging and the
variance-threshold policy that picks between them.

All functions are pure: they take a TokenSet (plus the attention workspace
of the current layer) and return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import ReductionConfig
from .errors import ConfigurationError, ScheduleError
from .tokens import AttentionWorkspace, LayerTrace, TokenSet

POLICY_PRUNE = "prune"
POLICY_MERGE = "merge"
POLICY_NONE = "none"


@dataclass(frozen=True)
class ScoreVector:
    """Normalized importance scores over the patch tokens (sum to 1)."""

    scores: np.ndarray

    def __post_init__(self):
        s = self.scores
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("scores must be a non-empty vector")
        if np.any(s < 0) or abs(float(s.sum()) - 1.0) > 1e-6:
            raise ConfigurationError("scores must be non-negative and sum to 1")

    @property
    def variance(self) -> float:
        return float(np.var(self.scores))


def ats_score(ws: AttentionWorkspace, tokens: TokenSet) -> ScoreVector:
    """Importance of each patch token: CLS-row attention weight times the
    token's value-vector norm, normalized to sum 1. Heads are averaged."""
    if not tokens.has_cls:
        raise ConfigurationError("scoring requires a CLS token at row 0")
    cls_row = ws.attention.mean(axis=0)[0, 1:]
    v_norm = np.linalg.norm(ws.v, axis=2).mean(axis=0)[1:]
    raw = cls_row * v_norm
    total = float(raw.sum())
    if total <= 0.0:
        return ScoreVector(np.full(raw.shape, 1.0 / raw.size))
    return ScoreVector(raw / total)


def choose_policy(scores: ScoreVector, cfg: ReductionConfig) -> str:
    """Prune when score variance is at or below tau, otherwise merge.
    force_mode overrides the variance rule."""
    if cfg.force_mode == "prune_only":
        return POLICY_PRUNE
    if cfg.force_mode == "merge_only":
        return POLICY_MERGE
    return POLICY_PRUNE if scores.variance <= cfg.tau else POLICY_MERGE


def prune_topk(tokens: TokenSet, scores: ScoreVector, keep: int) -> TokenSet:
    """Keep the `keep` highest-scoring patch tokens (plus CLS).

    Ties are broken toward the lower original index; survivors keep their
    relative order; discarded origins are recorded in pruned_origins.
    """
    n_patch = tokens.num_patch_tokens
    if scores.scores.size != n_patch:
        raise ScheduleError("score vector does not match patch-token count")
    if keep > n_patch:
        raise ScheduleError(f"cannot keep {keep} of {n_patch} patch tokens")
    if keep == 0 and not tokens.has_cls:
        raise ScheduleError("pruning to zero tokens with no CLS present")
    if keep == n_patch:
        return tokens
    order = np.lexsort((np.arange(n_patch), -scores.scores))
    keep_patch = np.sort(order[:keep])
    drop_patch = np.sort(order[keep:])
    off = tokens.patch_offset
    dropped = frozenset().union(*(tokens.origins[off + i] for i in drop_patch))
    sel = keep_patch + off
    if tokens.has_cls:
        sel = np.concatenate(([0], sel))
    out = tokens.select(sel)
    return replace(out, pruned_origins=tokens.pruned_origins | dropped)


def _cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cosine similarities; zero-norm rows count as similar only to each other."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ua = np.divide(a, na[:, None], out=np.zeros_like(a), where=na[:, None] > 0)
    ub = np.divide(b, nb[:, None], out=np.zeros_like(b), where=nb[:, None] > 0)
    sims = ua @ ub.T
    za, zb = na == 0, nb == 0
    if za.any() and zb.any():
        sims[np.ix_(za, zb)] = 1.0
    return sims


def bsm_merge(tokens: TokenSet, merges: int) -> TokenSet:
    """Bipartite soft matching: patch tokens at even positions form set A,
    odd positions set B; each A token edges to its most-similar B token
    (cosine, ties toward the lower B index); the top `merges` edges by
    similarity (ties toward the lower A index) are folded A-into-B via a
    size-weighted feature average. Many A tokens may fold into one B token.
    """
    if merges == 0:
        return tokens
    n_patch = tokens.num_patch_tokens
    off = tokens.patch_offset
    a_idx = np.arange(0, n_patch, 2)
    b_idx = np.arange(1, n_patch, 2)
    if b_idx.size == 0:
        raise ScheduleError("no B-partition tokens available to merge into")
    if merges > a_idx.size:
        raise ScheduleError(
            f"cannot merge {merges} tokens from an A partition of {a_idx.size}")
    feats = tokens.patch_features
    sims = _cosine_matrix(feats[a_idx], feats[b_idx])
    best_b = sims.argmax(axis=1)
    best_sim = sims[np.arange(a_idx.size), best_b]
    edge_order = np.lexsort((np.arange(a_idx.size), -best_sim))
    chosen_a = edge_order[:merges]

    feat_acc = tokens.features.astype(np.float64) * tokens.sizes[:, None]
    size_acc = tokens.sizes.copy()
    origin_acc = list(tokens.origins)
    removed = np.zeros(tokens.num_tokens, dtype=bool)
    for ai in chosen_a:
        src = off + a_idx[ai]
        dst = off + b_idx[best_b[ai]]
        feat_acc[dst] += feat_acc[src]
        size_acc[dst] += size_acc[src]
        origin_acc[dst] = origin_acc[dst] | origin_acc[src]
        removed[src] = True

    keep = np.flatnonzero(~removed)
    features = feat_acc[keep] / size_acc[keep, None]
    return replace(
        tokens,
        features=features,
        sizes=size_acc[keep],
        origins=tuple(origin_acc[i] for i in keep),
    )


def reduce_layer(tokens: TokenSet, ws: AttentionWorkspace, layer: int,
                 cfg: ReductionConfig) -> tuple[TokenSet, LayerTrace]:
    """Score the tokens, pick a policy, and reduce down to the schedule's
    keep-count for this layer. The trace records the variance and the
    applied policy ("none" when the schedule required no removal)."""
    if cfg.schedule is None or layer >= len(cfg.schedule):
        raise ScheduleError(f"no schedule entry for layer {layer}")
    keep = cfg.schedule[layer]
    n_patch = tokens.num_patch_tokens
    if keep > n_patch:
        raise ScheduleError(
            f"layer {layer}: schedule keeps {keep} but only {n_patch} tokens remain")
    scores = ats_score(ws, tokens)
    variance = scores.variance
    if keep == n_patch:
        out, policy = tokens, POLICY_NONE
    else:
        policy = choose_policy(scores, cfg)
        if policy == POLICY_PRUNE:
            out = prune_topk(tokens, scores, keep)
        else:
            out = bsm_merge(tokens, n_patch - keep)
    trace = LayerTrace(
        layer_index=layer,
        tokens_in=tokens.num_tokens,
        tokens_out=out.num_tokens,
        score_variance=variance,
        policy=policy,
    )
    return out, trace
