"""Encoder/reduction configuration and the key=value config file reader."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

FORCE_MODES = ("adaptive", "prune_only", "merge_only")
SCHEDULE_MODES = ("halving", "uniform")


def derive_schedule(initial: int, target: int, num_layers: int,
                    mode: str = "halving") -> tuple[int, ...]:
    """Per-layer keep-counts taking `initial` patch tokens down to `target`.

    "halving" halves the excess over the target at each layer (front-loaded;
    the tail is clamped so no single layer ever has to remove more tokens
    than a bipartite merge could). "uniform" removes a constant number per
    layer with the remainder spread over the earliest layers. Both end
    exactly at `target` and are non-increasing. If `initial` <= `target`
    the schedule is constant at `initial`.
    """
    if num_layers < 1:
        raise ConfigurationError("num_layers must be >= 1")
    if target < 1:
        raise ConfigurationError("target_tokens must be >= 1")
    if initial <= target:
        return (initial,) * num_layers
    if mode == "uniform":
        excess = initial - target
        base, rem = divmod(excess, num_layers)
        keeps, cur = [], initial
        for layer in range(num_layers):
            cur -= base + (1 if layer < rem else 0)
            keeps.append(cur)
        return tuple(keeps)
    if mode != "halving":
        raise ConfigurationError(f"unknown schedule mode: {mode!r}")
    # clearable(m): largest excess m trailing layers can still remove given
    # that one merge layer removes at most ceil(n/2) tokens
    clearable = [0]
    for _ in range(num_layers):
        clearable.append(2 * clearable[-1] + target)
    excess = initial - target
    keeps = []
    for layer in range(1, num_layers + 1):
        excess = min(excess // 2, clearable[num_layers - layer])
        keeps.append(target + excess)
    return tuple(keeps)


@dataclass(frozen=True)
class ReductionConfig:
    """Controls the per-layer token-reduction stage."""

    enabled: bool = True
    tau: float = 1e-5
    target_tokens: int = 16
    force_mode: str = "adaptive"
    schedule_mode: str = "halving"
    schedule: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigurationError("tau must be > 0")
        if self.target_tokens < 1:
            raise ConfigurationError("target_tokens must be >= 1")
        if self.force_mode not in FORCE_MODES:
            raise ConfigurationError(
                f"force_mode must be one of {FORCE_MODES}, got {self.force_mode!r}")
        if self.schedule_mode not in SCHEDULE_MODES:
            raise ConfigurationError(
                f"schedule_mode must be one of {SCHEDULE_MODES}, got {self.schedule_mode!r}")
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(int(k) for k in self.schedule))
            sched = self.schedule
            if not sched:
                raise ConfigurationError("explicit schedule must be non-empty")
            if any(a < b for a, b in zip(sched, sched[1:])):
                raise ConfigurationError("schedule must be non-increasing")
            if sched[-1] != self.target_tokens:
                raise ConfigurationError("schedule must end at target_tokens")

    def resolved(self, initial: int, num_layers: int) -> "ReductionConfig":
        """Return a copy whose schedule is materialized for `initial` tokens."""
        if self.schedule is not None:
            if len(self.schedule) != num_layers:
                raise ConfigurationError(
                    f"schedule has {len(self.schedule)} entries for {num_layers} layers")
            if self.schedule[0] > initial:
                raise ConfigurationError("schedule starts above the initial token count")
            return self
        sched = derive_schedule(initial, self.target_tokens, num_layers,
                                self.schedule_mode)
        return dataclasses.replace(self, schedule=sched)


@dataclass(frozen=True)
class EncoderConfig:
    """Geometry and seeding for the encoder."""

    image_side: int = 448
    patch_side: int = 28
    embed_dim: int = 64
    num_heads: int = 4
    num_layers: int = 8
    ffn_hidden: int | None = None
    seed: int = 0
    use_cls: bool = True
    reduction: ReductionConfig = field(default_factory=ReductionConfig)

    def __post_init__(self):
        if self.image_side < 1 or self.patch_side < 1:
            raise ConfigurationError("image_side and patch_side must be positive")
        if self.image_side % self.patch_side != 0:
            raise ConfigurationError(
                f"image_side {self.image_side} not divisible by patch_side {self.patch_side}")
        if self.num_layers < 1:
            raise ConfigurationError("num_layers must be >= 1")
        if self.num_heads < 1 or self.embed_dim % self.num_heads != 0:
            raise ConfigurationError(
                f"embed_dim {self.embed_dim} not divisible by num_heads {self.num_heads}")
        if self.ffn_hidden is None:
            object.__setattr__(self, "ffn_hidden", 4 * self.embed_dim)
        if self.ffn_hidden < 1:
            raise ConfigurationError("ffn_hidden must be >= 1")

    @property
    def grid_side(self) -> int:
        return self.image_side // self.patch_side

    @property
    def num_patches(self) -> int:
        return self.grid_side ** 2

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads


_ENCODER_KEYS = {
    "image_side": int, "patch_side": int, "embed_dim": int, "num_heads": int,
    "num_layers": int, "ffn_hidden": int, "seed": int, "use_cls": bool,
}
_REDUCTION_KEYS = {
    "enabled": bool, "tau": float, "target_tokens": int,
    "force_mode": str, "schedule_mode": str,
}


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {raw!r}")


def load_config(path: str | Path) -> EncoderConfig:
    """Read an EncoderConfig from a flat `key = value` file.

    Accepts every EncoderConfig field plus the reduction keys
    (enabled, tau, target_tokens, force_mode, schedule_mode).
    Blank lines and '#' comments are ignored.
    """
    enc_kwargs: dict = {}
    red_kwargs: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in _ENCODER_KEYS:
            caster, bucket = _ENCODER_KEYS[key], enc_kwargs
        elif key in _REDUCTION_KEYS:
            caster, bucket = _REDUCTION_KEYS[key], red_kwargs
        else:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            value = _parse_bool(raw, key) if caster is bool else caster(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {key}: {exc}") from exc
        bucket[key] = value
    return EncoderConfig(reduction=ReductionConfig(**red_kwargs), **enc_kwargs)
