"""Minimal deterministic ViT encoder hosting the token-reduction stage.

Weights are seeded pseudo-random (uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
PCG64) and materialized once at construction; an Encoder instance is immutable
afterwards and safe to share between threads. There is no positional
embedding and no bias term anywhere, so identical patches produce identical
token features at every stage.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from . import reduction as red
from .config import EncoderConfig
from .errors import ConfigurationError, NumericError
from .tokens import AttentionWorkspace, LayerTrace, TokenSet

_LN_EPS = 1e-6


def _layer_norm(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + _LN_EPS)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def attention_flops(n: int, cfg: EncoderConfig) -> int:
    """Q/K/V/output projections plus the two n x n matmuls."""
    d = cfg.embed_dim
    return 4 * n * d * d + 2 * n * n * d


def ffn_flops(n: int, cfg: EncoderConfig) -> int:
    return 2 * n * cfg.embed_dim * cfg.ffn_hidden * 2


def flops_estimate(traces: list[LayerTrace], cfg: EncoderConfig) -> int:
    """Analytic FLOP total: attention at each layer's entry token count,
    FFN at its post-reduction count."""
    if not traces:
        raise ConfigurationError("flops_estimate needs at least one trace")
    total = 0
    for t in traces:
        total += attention_flops(t.tokens_in, cfg) + ffn_flops(t.tokens_out, cfg)
    return total


class Encoder:
    """Patch embedding + `num_layers` pre-norm blocks of
    {attention -> reduction -> FFN}."""

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        d = cfg.embed_dim
        patch_dim = 3 * cfg.patch_side ** 2
        self.w_patch = _uniform(rng, (patch_dim, d), patch_dim)
        self.cls_token = _uniform(rng, (d,), d)
        self.layers = []
        for _ in range(cfg.num_layers):
            self.layers.append({
                "wq": _uniform(rng, (d, d), d),
                "wk": _uniform(rng, (d, d), d),
                "wv": _uniform(rng, (d, d), d),
                "wo": _uniform(rng, (d, d), d),
                "w1": _uniform(rng, (d, cfg.ffn_hidden), d),
                "w2": _uniform(rng, (cfg.ffn_hidden, d), cfg.ffn_hidden),
            })

    def patch_embed(self, image: np.ndarray) -> TokenSet:
        """Project each PxP patch to a token. `image` is (side, side, 3)
        float in [0, 1]."""
        cfg = self.cfg
        image = np.asarray(image, dtype=np.float64)
        side = cfg.image_side
        if image.shape != (side, side, 3):
            raise ConfigurationError(
                f"expected image of shape ({side}, {side}, 3), got {image.shape}")
        if not np.all(np.isfinite(image)) or image.min() < 0.0 or image.max() > 1.0:
            raise ConfigurationError("pixel values must lie in [0, 1]")
        g, p = cfg.grid_side, cfg.patch_side
        patches = image.reshape(g, p, g, p, 3).transpose(0, 2, 1, 3, 4)
        flat = patches.reshape(g * g, p * p * 3)
        feats = flat @ self.w_patch
        origins = [frozenset((i,)) for i in range(g * g)]
        if cfg.use_cls:
            feats = np.vstack([self.cls_token[None, :], feats])
            origins.insert(0, frozenset())
        sizes = np.ones(feats.shape[0], dtype=np.int64)
        return TokenSet(features=feats, sizes=sizes, origins=tuple(origins),
                        has_cls=cfg.use_cls)

    def attention_block(self, tokens: TokenSet, layer: int) -> tuple[TokenSet, AttentionWorkspace]:
        """Multi-head self-attention with a log(size) bias on every key
        column, plus the residual connection."""
        cfg = self.cfg
        w = self.layers[layer]
        x = tokens.features
        n = x.shape[0]
        h = _layer_norm(x)
        heads, dh = cfg.num_heads, cfg.head_dim

        def split(m):
            return m.reshape(n, heads, dh).transpose(1, 0, 2)

        q = split(h @ w["wq"])
        k = split(h @ w["wk"])
        v = split(h @ w["wv"])
        logits = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
        logits = logits + np.log(tokens.sizes.astype(np.float64))[None, None, :]
        logits -= logits.max(axis=-1, keepdims=True)
        weights = np.exp(logits)
        attn = weights / weights.sum(axis=-1, keepdims=True)
        ctx = (attn @ v).transpose(1, 0, 2).reshape(n, cfg.embed_dim)
        out = x + ctx @ w["wo"]
        if not np.all(np.isfinite(out)):
            raise NumericError("non-finite activations after attention", layer)
        new_tokens = TokenSet(features=out, sizes=tokens.sizes,
                              origins=tokens.origins, has_cls=tokens.has_cls,
                              pruned_origins=tokens.pruned_origins)
        return new_tokens, AttentionWorkspace(q=q, k=k, v=v, attention=attn)

    def ffn_block(self, tokens: TokenSet, layer: int) -> TokenSet:
        w = self.layers[layer]
        x = tokens.features
        out = x + _gelu(_layer_norm(x) @ w["w1"]) @ w["w2"]
        if not np.all(np.isfinite(out)):
            raise NumericError("non-finite activations after FFN", layer)
        return TokenSet(features=out, sizes=tokens.sizes, origins=tokens.origins,
                        has_cls=tokens.has_cls, pruned_origins=tokens.pruned_origins)

    def encode(self, image: np.ndarray) -> tuple[TokenSet, list[LayerTrace]]:
        """Run all blocks; returns the final TokenSet and one trace per layer."""
        cfg = self.cfg
        tokens = self.patch_embed(image)
        rcfg = None
        if cfg.reduction.enabled:
            if not cfg.use_cls:
                raise ConfigurationError("token reduction requires use_cls=True")
            rcfg = cfg.reduction.resolved(tokens.num_patch_tokens, cfg.num_layers)
        traces: list[LayerTrace] = []
        for layer in range(cfg.num_layers):
            n_in = tokens.num_tokens
            tokens, ws = self.attention_block(tokens, layer)
            if rcfg is not None:
                tokens, trace = red.reduce_layer(tokens, ws, layer, rcfg)
            else:
                trace = LayerTrace(layer_index=layer, tokens_in=n_in,
                                   tokens_out=n_in, score_variance=None,
                                   policy=red.POLICY_NONE)
            tokens = self.ffn_block(tokens, layer)
            trace.attention_flops = attention_flops(trace.tokens_in, cfg)
            trace.ffn_flops = ffn_flops(trace.tokens_out, cfg)
            traces.append(trace)
        return tokens, traces


def encode(image: np.ndarray, cfg: EncoderConfig) -> tuple[TokenSet, list[LayerTrace]]:
    """One-shot convenience wrapper around Encoder(cfg).encode(image)."""
    return Encoder(cfg).encode(image)
