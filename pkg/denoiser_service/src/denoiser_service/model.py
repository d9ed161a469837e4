"""Noise-level-conditioned residual denoising CNN.

A compact DnCNN-style network: the noisy image is stacked with a constant
noise-level map, the network predicts the noise residual, and the output is
input minus residual. Conditioning on sigma lets one set of weights serve the
whole half-quadratic-splitting schedule.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn


class ConditionedDenoiser(nn.Module):
    def __init__(self, channels: int = 48, depth: int = 7):
        super().__init__()
        layers = [nn.Conv2d(2, channels, 3, padding=1), nn.ReLU(inplace=True)]
        for _ in range(depth - 2):
            layers += [nn.Conv2d(channels, channels, 3, padding=1),
                       nn.ReLU(inplace=True)]
        layers.append(nn.Conv2d(channels, 1, 3, padding=1))
        self.body = nn.Sequential(*layers)

    def forward(self, noisy: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
        sigma_map = sigma.view(-1, 1, 1, 1).expand_as(noisy)
        residual = self.body(torch.cat([noisy, sigma_map], dim=1))
        return noisy - residual


def load_model(path: str, device: str = "cpu") -> ConditionedDenoiser:
    state = torch.load(path, map_location=device, weights_only=True)
    model = ConditionedDenoiser(channels=state["_channels"], depth=state["_depth"])
    model.load_state_dict({k: v for k, v in state.items() if not k.startswith("_")})
    model.to(device)
    model.eval()
    return model


@torch.no_grad()
def denoise(model: ConditionedDenoiser, image: np.ndarray, sigma: float,
            device: str = "cpu") -> np.ndarray:
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
    x = x.unsqueeze(0).unsqueeze(0).to(device)
    s = torch.tensor([sigma], dtype=torch.float32, device=device)
    out = model(x, s)
    return out.squeeze(0).squeeze(0).cpu().numpy()
