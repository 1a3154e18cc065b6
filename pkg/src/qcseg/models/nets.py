"""Network definitions: residual U-Net, VGG-like FCN, and the curve classifier."""

from __future__ import annotations

import torch
import torch.nn as nn

from .config import QCArchConfig, SegArchConfig


def _norm(ch: int) -> nn.Module:
    # GroupNorm keeps behavior independent of batch size
    return nn.GroupNorm(min(8, ch), ch)


class ResidualUnit(nn.Module):
    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.n1 = _norm(cout)
        self.n2 = _norm(cout)
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        h = self.act(self.n1(self.conv1(x)))
        h = self.n2(self.conv2(h))
        return self.act(h + self.skip(x))


class ResUNet(nn.Module):
    """Encoder-decoder with residual units and skip connections."""

    def __init__(self, cfg: SegArchConfig):
        super().__init__()
        chs = [cfg.base_channels * 2**i for i in range(cfg.depth)]
        self.depth = cfg.depth
        self.enc = nn.ModuleList()
        cin = cfg.input_channels
        for c in chs:
            self.enc.append(ResidualUnit(cin, c))
            cin = c
        self.pool = nn.MaxPool2d(2)
        self.up = nn.ModuleList()
        self.dec = nn.ModuleList()
        for i in range(cfg.depth - 1, 0, -1):
            self.up.append(nn.ConvTranspose2d(chs[i], chs[i - 1], 2, stride=2))
            self.dec.append(ResidualUnit(2 * chs[i - 1], chs[i - 1]))
        self.head = nn.Conv2d(chs[0], cfg.n_classes, 1)

    def forward(self, x):
        skips = []
        for i, block in enumerate(self.enc):
            x = block(x)
            if i < self.depth - 1:
                skips.append(x)
                x = self.pool(x)
        for up, dec in zip(self.up, self.dec):
            x = up(x)
            x = dec(torch.cat([skips.pop(), x], dim=1))
        return self.head(x)


class VggFCN(nn.Module):
    """VGG-style conv stacks with stride-2 downsampling and a bilinear
    upsampling head back to full resolution."""

    def __init__(self, cfg: SegArchConfig):
        super().__init__()
        chs = [cfg.base_channels * 2**i for i in range(cfg.depth)]
        layers = []
        cin = cfg.input_channels
        for i, c in enumerate(chs):
            layers += [nn.Conv2d(cin, c, 3, padding=1), _norm(c), nn.ReLU(inplace=True)]
            layers += [nn.Conv2d(c, c, 3, padding=1), _norm(c), nn.ReLU(inplace=True)]
            if i < cfg.depth - 1:
                layers.append(nn.MaxPool2d(2))
            cin = c
        self.features = nn.Sequential(*layers)
        self.scale = 2 ** (cfg.depth - 1)
        self.classifier = nn.Conv2d(chs[-1], cfg.n_classes, 1)

    def forward(self, x):
        h = self.classifier(self.features(x))
        if self.scale > 1:
            h = nn.functional.interpolate(
                h, scale_factor=self.scale, mode="bilinear", align_corners=False
            )
        return h


class CurveClassifier(nn.Module):
    """Per-timestep dense map, 3-layer LSTM, scalar logit off the last
    layer's final hidden state."""

    def __init__(self, cfg: QCArchConfig):
        super().__init__()
        self.dense = nn.Linear(cfg.input_dim, cfg.dense_dim)
        self.lstm = nn.LSTM(
            cfg.dense_dim, cfg.lstm_hidden, num_layers=cfg.lstm_layers, batch_first=True
        )
        self.head = nn.Linear(cfg.lstm_hidden, 1)
        # forget-gate bias at 1 keeps gradients alive through the stack
        for name, param in self.lstm.named_parameters():
            if name.startswith("bias"):
                h = cfg.lstm_hidden
                with torch.no_grad():
                    param[h : 2 * h].fill_(1.0)

    def forward(self, x):  # x: (B, T, D) -> logits (B,)
        h = torch.relu(self.dense(x))
        _, (hn, _) = self.lstm(h)
        return self.head(hn[-1]).squeeze(-1)


def build_seg_net(cfg: SegArchConfig) -> nn.Module:
    cfg.validate()
    return ResUNet(cfg) if cfg.arch == "unet" else VggFCN(cfg)


def build_qc_net(cfg: QCArchConfig) -> nn.Module:
    cfg.validate()
    return CurveClassifier(cfg)
