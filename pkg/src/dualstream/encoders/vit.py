"""Patch-embedding transformer appearance encoder (pre-norm blocks, CLS output)."""

import torch
from einops import rearrange, repeat
from torch import nn

from dualstream.encoders.config import ConfigMismatch, ViTConfig
from dualstream.tensor import check_finite


class TransformerBlock(nn.Module):
    """x + MHSA(LN(x)), then x + MLP(LN(x)) with a GELU hidden layer."""

    def __init__(self, dim: int, heads: int, mlp_hidden: int, ln_eps: float = 1e-6) -> None:
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, eps=ln_eps)
        self.attn = nn.MultiheadAttention(dim, heads, bias=True, batch_first=True)
        self.norm2 = nn.LayerNorm(dim, eps=ln_eps)
        self.mlp = nn.Sequential(
            nn.Linear(dim, mlp_hidden),
            nn.GELU(),
            nn.Linear(mlp_hidden, dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.norm2(x))


class ViTEncoder(nn.Module):
    """
    Appearance encoder: patchify, embed, prepend CLS, add positions, run the
    blocks, apply a final LayerNorm and return the CLS token.
    """

    def __init__(self, cfg: ViTConfig) -> None:
        super().__init__()
        self.cfg = cfg
        d = cfg.embed_dim
        self.patch_embed = nn.Linear(cfg.patch_dim, d)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, d))
        self.pos_embed = nn.Parameter(torch.zeros(1, cfg.sequence_length, d))
        self.blocks = nn.ModuleList(
            [TransformerBlock(d, cfg.heads, cfg.mlp_hidden, cfg.ln_eps) for _ in range(cfg.depth)]
        )
        self.norm = nn.LayerNorm(d, eps=cfg.ln_eps)
        self.reset_parameters()

    @property
    def output_dim(self) -> int:
        return self.cfg.embed_dim

    def reset_parameters(self) -> None:
        for module in self.modules():
            if isinstance(module, nn.Linear):
                nn.init.trunc_normal_(module.weight, std=0.02)
                if module.bias is not None:
                    nn.init.zeros_(module.bias)
            elif isinstance(module, nn.MultiheadAttention):
                nn.init.trunc_normal_(module.in_proj_weight, std=0.02)
                nn.init.zeros_(module.in_proj_bias)
            elif isinstance(module, nn.LayerNorm):
                nn.init.ones_(module.weight)
                nn.init.zeros_(module.bias)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)

    def embed_patches(self, images: torch.Tensor) -> torch.Tensor:
        """(B, C, S, S) normalised images -> (B, P, d) patch embeddings."""
        cfg = self.cfg
        expected = (cfg.in_channels, cfg.image_size, cfg.image_size)
        if images.ndim != 4 or tuple(images.shape[1:]) != expected:
            raise ConfigMismatch(
                f"ViT expects (B, {cfg.in_channels}, {cfg.image_size}, {cfg.image_size}) input, "
                f"got {tuple(images.shape)}"
            )
        patches = rearrange(
            images, "b c (h p1) (w p2) -> b (h w) (p1 p2 c)", p1=cfg.patch_size, p2=cfg.patch_size
        )
        return self.patch_embed(patches)

    def encode_tokens(self, tokens: torch.Tensor) -> torch.Tensor:
        """(B, P, d) patch embeddings -> (B, P + 1, d) normalised sequence, CLS first."""
        cls = repeat(self.cls_token, "1 1 d -> b 1 d", b=tokens.shape[0])
        x = torch.cat([cls, tokens], dim=1) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        return self.norm(x)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        features = self.encode_tokens(self.embed_patches(images))[:, 0]
        return check_finite(features, "ViT encoder")
