"""The cnn3-film-v1 noise predictor in torch.

Convention: a complex angular state maps to two real planes scaled by sqrt(2)
(unit variance per plane when the complex entries are unit variance); the
network regresses the sqrt(2)-scaled planes of the injected noise. Three 3x3
cross-correlation layers with circular padding on both axes, SiLU after
layers 1-2, and a FiLM per-channel bias after layer 1 driven by a 16-dim
sinusoidal embedding of t/T at octave frequencies through two linear layers.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

HIDDEN = 32
EMB_DIM = 16


def time_embedding(t: torch.Tensor, t_max: int) -> torch.Tensor:
    """(batch,) integer steps -> (batch, 16) embedding sin/cos(2^k pi t/T)."""
    tau = t.to(torch.float32) / float(t_max)
    k = torch.arange(EMB_DIM // 2, dtype=torch.float32, device=t.device)
    ang = (2.0**k)[None, :] * torch.pi * tau[:, None]
    emb = torch.empty(t.shape[0], EMB_DIM, dtype=torch.float32, device=t.device)
    emb[:, 0::2] = torch.sin(ang)
    emb[:, 1::2] = torch.cos(ang)
    return emb


class NoisePredictor(nn.Module):
    def __init__(self, t_max: int):
        super().__init__()
        self.t_max = t_max
        self.conv1 = nn.Conv2d(2, HIDDEN, 3, padding=0)
        self.conv2 = nn.Conv2d(HIDDEN, HIDDEN, 3, padding=0)
        self.conv3 = nn.Conv2d(HIDDEN, 2, 3, padding=0)
        self.film_fc1 = nn.Linear(EMB_DIM, HIDDEN)
        self.film_fc2 = nn.Linear(HIDDEN, HIDDEN)

    @staticmethod
    def _circ(x: torch.Tensor, conv: nn.Conv2d) -> torch.Tensor:
        return conv(F.pad(x, (1, 1, 1, 1), mode="circular"))

    def forward(self, planes: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """planes: (batch, 2, n_r, n_t) sqrt(2)-scaled; t: (batch,) steps in 1..T."""
        film = self.film_fc2(F.silu(self.film_fc1(time_embedding(t, self.t_max))))
        x = self._circ(planes, self.conv1)
        x = F.silu(x + film[:, :, None, None])
        x = F.silu(self._circ(x, self.conv2))
        return self._circ(x, self.conv3)

    def predict_complex(self, ht: np.ndarray, t: int) -> np.ndarray:
        """Single complex matrix in, complex noise prediction out."""
        planes = torch.tensor(
            np.stack([ht.real, ht.imag]) * np.sqrt(2.0), dtype=torch.float32
        )[None]
        with torch.no_grad():
            out = self.forward(planes, torch.tensor([t]))[0].numpy()
        return (out[0].astype(np.float64) + 1j * out[1].astype(np.float64)) / np.sqrt(2.0)

    def export_tensors(self) -> dict:
        """State tensors keyed by the portable weight-file names."""
        sd = self.state_dict()
        return {
            "conv1.w": sd["conv1.weight"].numpy(),
            "conv1.b": sd["conv1.bias"].numpy(),
            "film.fc1.w": sd["film_fc1.weight"].numpy(),
            "film.fc1.b": sd["film_fc1.bias"].numpy(),
            "film.fc2.w": sd["film_fc2.weight"].numpy(),
            "film.fc2.b": sd["film_fc2.bias"].numpy(),
            "conv2.w": sd["conv2.weight"].numpy(),
            "conv2.b": sd["conv2.bias"].numpy(),
            "conv3.w": sd["conv3.weight"].numpy(),
            "conv3.b": sd["conv3.bias"].numpy(),
        }

    def load_tensors(self, tensors: dict) -> None:
        mapping = {
            "conv1.weight": "conv1.w", "conv1.bias": "conv1.b",
            "conv2.weight": "conv2.w", "conv2.bias": "conv2.b",
            "conv3.weight": "conv3.w", "conv3.bias": "conv3.b",
            "film_fc1.weight": "film.fc1.w", "film_fc1.bias": "film.fc1.b",
            "film_fc2.weight": "film.fc2.w", "film_fc2.bias": "film.fc2.b",
        }
        self.load_state_dict({k: torch.tensor(np.array(tensors[v])) for k, v in mapping.items()})
