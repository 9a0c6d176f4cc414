"""Convolutional generator/discriminator pair for 32x32 images.

The generator is conditioned on the class via a one-hot concatenated to the
latent. The discriminator gets the class as extra feature planes after its
first convolution, and its flattened penultimate features feed two heads:
the real/fake probability and the code-reconstruction head Q.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class ConvGenerator(nn.Module):
    def __init__(self, d_z: int, d_c: int, n_classes: int, base_channels: int = 32):
        super().__init__()
        self.d_z, self.d_c, self.n_classes = d_z, d_c, n_classes
        b = base_channels
        self.fc = nn.Sequential(
            nn.Linear(d_z + d_c + n_classes, b * 4 * 4 * 4),
            nn.BatchNorm1d(b * 4 * 4 * 4),
            nn.ReLU(inplace=True),
        )
        self.deconv = nn.Sequential(
            nn.ConvTranspose2d(b * 4, b * 2, 4, 2, 1),  # 8x8
            nn.BatchNorm2d(b * 2),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(b * 2, b, 4, 2, 1),      # 16x16
            nn.BatchNorm2d(b),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(b, 3, 4, 2, 1),          # 32x32
            nn.Sigmoid(),
        )
        self._base = b

    def forward(self, z: torch.Tensor, c: torch.Tensor, y_onehot: torch.Tensor) -> torch.Tensor:
        h = self.fc(torch.cat([z, c, y_onehot], dim=1))
        h = h.view(-1, self._base * 4, 4, 4)
        return self.deconv(h)


class ConvDiscriminator(nn.Module):
    def __init__(self, d_c: int, n_classes: int, base_channels: int = 32):
        super().__init__()
        self.d_c, self.n_classes = d_c, n_classes
        b = base_channels
        self.conv1 = nn.Sequential(
            nn.Conv2d(3, b, 4, 2, 1),  # 16x16
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.trunk = nn.Sequential(
            nn.Conv2d(b + n_classes, b * 2, 4, 2, 1),  # 8x8
            nn.BatchNorm2d(b * 2),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(b * 2, b * 4, 4, 2, 1),          # 4x4
            nn.BatchNorm2d(b * 4),
            nn.LeakyReLU(0.2, inplace=True),
        )
        feat = b * 4 * 4 * 4
        self.d_head = nn.Sequential(nn.Linear(feat, 1), nn.Sigmoid())
        self.q_head = nn.Sequential(
            nn.Linear(feat, 128),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(128, d_c),
        )

    def features(self, x: torch.Tensor, y_onehot: torch.Tensor) -> torch.Tensor:
        h = self.conv1(x)
        planes = y_onehot[:, :, None, None].expand(-1, -1, h.shape[2], h.shape[3])
        h = self.trunk(torch.cat([h, planes], dim=1))
        return h.flatten(1)

    def forward(self, x: torch.Tensor, y_onehot: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        feat = self.features(x, y_onehot)
        return self.d_head(feat).squeeze(1), self.q_head(feat)


def one_hot(labels: torch.Tensor, n_classes: int) -> torch.Tensor:
    return torch.nn.functional.one_hot(labels.long(), n_classes).float()
