"""Registry of the thirteen supported vision-transformer checkpoints."""

from __future__ import annotations

from dataclasses import dataclass

# per-channel normalization recipes
_INCEPTION = ((0.5, 0.5, 0.5), (0.5, 0.5, 0.5))
_IMAGENET = ((0.485, 0.456, 0.406), (0.229, 0.224, 0.225))


@dataclass(frozen=True)
class ExtractorModel:
    name: str
    input_size: int  # parsed from the name suffix (224 or 384)
    embed_dim: int
    patch_size: int
    depth: int
    num_heads: int
    layer_scale: bool  # deit3 blocks carry LayerScale gammas
    mean: tuple
    std: tuple


def _vit(name, embed_dim, depth, heads, layer_scale=False):
    parts = name.split("_")
    input_size = int(parts[-1])
    patch = int(parts[-2].removeprefix("patch"))
    mean, std = _IMAGENET if layer_scale else _INCEPTION
    return ExtractorModel(
        name=name,
        input_size=input_size,
        embed_dim=embed_dim,
        patch_size=patch,
        depth=depth,
        num_heads=heads,
        layer_scale=layer_scale,
        mean=mean,
        std=std,
    )


# order follows the published list
MODELS = [
    _vit("vit_base_patch16_224", 768, 12, 12),
    _vit("vit_base_patch32_224", 768, 12, 12),
    _vit("vit_large_patch16_224", 1024, 24, 16),
    _vit("vit_small_patch32_224", 384, 12, 6),
    _vit("deit3_small_patch16_224", 384, 12, 6, layer_scale=True),
    _vit("vit_base_patch8_224", 768, 12, 12),
    _vit("vit_tiny_patch16_224", 192, 12, 3),
    _vit("vit_small_patch16_224", 384, 12, 6),
    _vit("vit_base_patch16_384", 768, 12, 12),
    _vit("vit_tiny_patch16_384", 192, 12, 3),
    _vit("vit_small_patch32_384", 384, 12, 6),
    _vit("vit_small_patch16_384", 384, 12, 6),
    _vit("vit_base_patch32_384", 768, 12, 12),
]

_BY_NAME = {m.name: m for m in MODELS}


def list_models() -> list[ExtractorModel]:
    """The supported checkpoints, in their published order."""
    return list(MODELS)


def get_model(name: str) -> ExtractorModel:
    if name not in _BY_NAME:
        known = ", ".join(sorted(_BY_NAME))
        raise KeyError(f"unknown model {name!r}; expected one of: {known}")
    return _BY_NAME[name]
