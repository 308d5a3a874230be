"""Minimal pre-norm vision transformer that loads timm-style state dicts.

Only the pieces needed for frozen feature extraction are implemented: patch
embedding, class token, learned position embedding, attention/MLP blocks
(optionally with LayerScale), and the final norm.  The feature of an image
is the class-token representation after the final norm, i.e. the pooled
input of the (discarded) classification head.
"""

from __future__ import annotations

import torch
from torch import nn

from .models import ExtractorModel


class _Attention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.scale = self.head_dim**-0.5
        self.qkv = nn.Linear(dim, dim * 3, bias=True)
        self.proj = nn.Linear(dim, dim, bias=True)

    def forward(self, x):
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.num_heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.proj(out)


class _LayerScale(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.gamma = nn.Parameter(torch.ones(dim))

    def forward(self, x):
        return x * self.gamma


class _Block(nn.Module):
    def __init__(self, dim: int, num_heads: int, layer_scale: bool, mlp_ratio: float = 4.0):
        super().__init__()
        hidden = int(dim * mlp_ratio)
        self.norm1 = nn.LayerNorm(dim, eps=1e-6)
        self.attn = _Attention(dim, num_heads)
        self.ls1 = _LayerScale(dim) if layer_scale else nn.Identity()
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.mlp = nn.Sequential()
        self.mlp.fc1 = nn.Linear(dim, hidden)
        self.mlp.act = nn.GELU()
        self.mlp.fc2 = nn.Linear(hidden, dim)
        self.ls2 = _LayerScale(dim) if layer_scale else nn.Identity()

    def forward(self, x):
        x = x + self.ls1(self.attn(self.norm1(x)))
        x = x + self.ls2(self.mlp(self.norm2(x)))
        return x


class VisionTransformer(nn.Module):
    def __init__(self, spec: ExtractorModel):
        super().__init__()
        self.spec = spec
        dim = spec.embed_dim
        n_patches = (spec.input_size // spec.patch_size) ** 2
        self.patch_embed = nn.Module()
        self.patch_embed.proj = nn.Conv2d(
            3, dim, kernel_size=spec.patch_size, stride=spec.patch_size
        )
        self.cls_token = nn.Parameter(torch.zeros(1, 1, dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, n_patches + 1, dim))
        self.blocks = nn.ModuleList(
            [_Block(dim, spec.num_heads, spec.layer_scale) for _ in range(spec.depth)]
        )
        self.norm = nn.LayerNorm(dim, eps=1e-6)

    @torch.no_grad()
    def features(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 3, S, S) float images -> (B, embed_dim) pooled class tokens."""
        b = x.shape[0]
        x = self.patch_embed.proj(x).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(b, -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        return self.norm(x)[:, 0]

    def load_timm_state_dict(self, state: dict) -> None:
        """Map a timm checkpoint onto this module; classifier-head weights
        are dropped, everything else must match."""
        own = self.state_dict()
        mapped = {}
        for key, tensor in state.items():
            if key.startswith("head") or key in ("fc_norm.weight", "fc_norm.bias"):
                continue
            mapped[key] = tensor
        missing = set(own) - set(mapped)
        extra = set(mapped) - set(own)
        if missing or extra:
            raise ValueError(
                f"checkpoint keys do not match {self.spec.name}: "
                f"missing {sorted(missing)[:4]}, unexpected {sorted(extra)[:4]}"
            )
        self.load_state_dict(mapped)
        self.eval()
        for p in self.parameters():
            p.requires_grad_(False)
