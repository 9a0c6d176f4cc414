"""Small CNN backbone: four stride-2 conv blocks, global average pooling, linear head.

~190k parameters at the default widths; sized for CPU training at 32x32.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class SmallCnn(nn.Module):
    def __init__(self, n_classes: int, widths: tuple[int, ...] = (32, 64, 96, 128)):
        super().__init__()
        blocks = []
        in_ch = 3
        for w in widths:
            blocks += [
                nn.Conv2d(in_ch, w, 3, stride=2, padding=1),
                nn.BatchNorm2d(w),
                nn.ReLU(inplace=True),
            ]
            in_ch = w
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Linear(in_ch, n_classes)
        self.embed_dim = in_ch
        self.n_classes = n_classes

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        h = self.blocks(x)
        return h.mean(dim=(2, 3))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.embed(x))

    def forward_with_embedding(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        emb = self.embed(x)
        return self.head(emb), emb
