"""U-shaped dense-block network that maps a coefficient stack to an estimate
of its invisible subbands.

The network is fully convolutional: a stem convolution, three encoder
dense blocks with down-transitions, an eight-layer center block, three
decoder dense blocks fed by transposed-conv up-transitions and encoder skip
concatenations, and a final linear convolution back to the input channel
count.  Every hidden convolution is 3x3, stride 1, tanh-activated.  With the
reference preset (four-layer outer blocks, eight-layer center) the total
convolution count is 6*4 + 8 + 8 = 40.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

#: Spatial downsampling factor of the encoder path (three max-pools of 2).
SIZE_MULTIPLE = 8


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters.

    ``growth_rates`` assigns one growth per block depth, ascending toward
    the bottleneck and mirrored on the decoder side; the reference preset is
    (16, 32, 64, 128) and the mini preset scales all four down by 4 so that
    desk-scale training fits in minutes.
    """

    channels: int
    growth_rates: tuple[int, int, int, int] = (16, 32, 64, 128)
    encoder_layers: int = 4
    center_layers: int = 8

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be positive")
        if len(self.growth_rates) != 4 or any(g < 1 for g in self.growth_rates):
            raise ValueError("growth_rates must be four positive integers")
        if self.encoder_layers < 1 or self.center_layers < 1:
            raise ValueError("block depths must be positive")

    @classmethod
    def reference(cls, channels: int) -> "NetConfig":
        return cls(channels=channels)

    @classmethod
    def mini(cls, channels: int) -> "NetConfig":
        return cls(channels=channels, growth_rates=(4, 8, 16, 32))

    def to_dict(self) -> dict:
        return {
            "channels": self.channels,
            "growth_rates": tuple(self.growth_rates),
            "encoder_layers": self.encoder_layers,
            "center_layers": self.center_layers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(
            channels=int(d["channels"]),
            growth_rates=tuple(int(g) for g in d["growth_rates"]),
            encoder_layers=int(d["encoder_layers"]),
            center_layers=int(d["center_layers"]),
        )


class TrimmedDenseBlock(nn.Module):
    """Densely connected block whose input maps are excluded from the output.

    Layer i sees the block input concatenated with all previous layer
    outputs (in_channels + i * growth channels) and emits ``growth`` maps;
    the block returns only the concatenated layer outputs, so its output
    width is n_layers * growth regardless of the input width.
    """

    def __init__(self, in_channels: int, growth: int, n_layers: int):
        super().__init__()
        self.in_channels = in_channels
        self.growth = growth
        self.convs = nn.ModuleList(
            nn.Conv2d(in_channels + i * growth, growth, 3, padding=1)
            for i in range(n_layers)
        )

    @property
    def out_channels(self) -> int:
        return len(self.convs) * self.growth

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        features = x
        outputs = []
        for conv in self.convs:
            y = torch.tanh(conv(features))
            outputs.append(y)
            features = torch.cat([features, y], dim=1)
        return torch.cat(outputs, dim=1)


class TransitionDown(nn.Module):
    """3x3 convolution (tanh) followed by a stride-2 max-pool."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)
        self.pool = nn.MaxPool2d(2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(torch.tanh(self.conv(x)))


class TransitionUp(nn.Module):
    """Transposed 3x3 convolution with stride 2 (tanh), doubling H and W."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.ConvTranspose2d(
            in_channels, out_channels, 3, stride=2, padding=1, output_padding=1
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.conv(x))


class TdbUnet(nn.Module):
    """The full encoder/decoder network; input and output are (B, S, H, W)
    with H and W divisible by SIZE_MULTIPLE."""

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        g1, g2, g3, g4 = config.growth_rates
        depth, center = config.encoder_layers, config.center_layers

        self.stem = nn.Conv2d(config.channels, g1, 3, padding=1)
        self.enc1 = TrimmedDenseBlock(g1, g1, depth)
        self.down1 = TransitionDown(self.enc1.out_channels)
        self.enc2 = TrimmedDenseBlock(self.enc1.out_channels, g2, depth)
        self.down2 = TransitionDown(self.enc2.out_channels)
        self.enc3 = TrimmedDenseBlock(self.enc2.out_channels, g3, depth)
        self.down3 = TransitionDown(self.enc3.out_channels)
        self.center = TrimmedDenseBlock(self.enc3.out_channels, g4, center)
        self.up1 = TransitionUp(self.center.out_channels, self.enc3.out_channels)
        self.dec1 = TrimmedDenseBlock(2 * self.enc3.out_channels, g3, depth)
        self.up2 = TransitionUp(self.dec1.out_channels, self.enc2.out_channels)
        self.dec2 = TrimmedDenseBlock(2 * self.enc2.out_channels, g2, depth)
        self.up3 = TransitionUp(self.dec2.out_channels, self.enc1.out_channels)
        self.dec3 = TrimmedDenseBlock(2 * self.enc1.out_channels, g1, depth)
        self.final = nn.Conv2d(self.dec3.out_channels, config.channels, 3, padding=1)

    def conv_layer_count(self) -> int:
        return sum(
            isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)) for m in self.modules()
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] % SIZE_MULTIPLE or x.shape[-1] % SIZE_MULTIPLE:
            raise ValueError(
                f"spatial dims must be multiples of {SIZE_MULTIPLE}, "
                f"got {tuple(x.shape[-2:])}"
            )
        h = torch.tanh(self.stem(x))
        e1 = self.enc1(h)
        e2 = self.enc2(self.down1(e1))
        e3 = self.enc3(self.down2(e2))
        c = self.center(self.down3(e3))
        d = self.dec1(torch.cat([self.up1(c), e3], dim=1))
        d = self.dec2(torch.cat([self.up2(d), e2], dim=1))
        d = self.dec3(torch.cat([self.up3(d), e1], dim=1))
        return self.final(d)
