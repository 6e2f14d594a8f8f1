"""
src/channel_model.py

MIMO Channel Modeling with Rayleigh Fading

Implements the propagation side of the link simulation:
- Quasi-static flat Rayleigh fading, i.i.d. CN(0, 1) channel entries
- Complex AWGN at every receive antenna
- Zero-forcing benchmark precoder W = H^H (H H^H)^-1
- Genie baseline transmitting sqrt(gamma)*s through an identity channel

All randomness flows through numpy Generators; per-trial substreams are keyed
by (seed, trial) so trials can run in any order or concurrently.
"""

import numpy as np
from dataclasses import dataclass
from typing import Tuple
from constants import NOISE_VARIANCE, ZF_MAX_CONDITION
import logging

logger = logging.getLogger(__name__)

# ============================================================================
# RANDOM STREAMS
# ============================================================================

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by (seed, trial)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def gen_channel(nr: int, nt: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw an Nr x Nt channel with i.i.d. CN(0, 1) entries.

    Each entry is (X + jY)/sqrt(2) with X, Y ~ N(0, 1), so E|h|^2 = 1.
    """
    if nr < 1 or nt < 1:
        raise ValueError(f"Channel dimensions must be positive, got {nr}x{nt}")
    return (rng.standard_normal((nr, nt)) + 1j * rng.standard_normal((nr, nt))) / np.sqrt(2.0)


def gen_noise(nr: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Draw an AWGN vector with i.i.d. CN(0, sigma2) entries."""
    if not sigma2 > 0:
        raise ValueError(f"Noise variance must be positive, got {sigma2}")
    return np.sqrt(sigma2 / 2.0) * (rng.standard_normal(nr) + 1j * rng.standard_normal(nr))

# ============================================================================
# ZERO FORCING
# ============================================================================

def zf_precoder(channel: np.ndarray) -> np.ndarray:
    """
    Zero-forcing precoder W = H^H (H H^H)^-1, so that H W = I.

    Raises:
        ValueError: Nr > Nt, or H H^H is numerically singular
    """
    h = np.asarray(channel, dtype=complex)
    nr, nt = h.shape
    if nr > nt:
        raise ValueError(f"Zero forcing needs Nr <= Nt, got Nr={nr}, Nt={nt}")
    gram = h @ h.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= ZF_MAX_CONDITION:
        raise ValueError(f"Channel is rank deficient for zero forcing (cond(HH^H)={cond:.3g})")
    return h.conj().T @ np.linalg.inv(gram)


def zf_signal(precoder: np.ndarray, symbols: np.ndarray, gamma: float) -> np.ndarray:
    """Transmit vector x = sqrt(gamma) * W s, so that H x = sqrt(gamma) * s."""
    return np.sqrt(gamma) * (precoder @ np.asarray(symbols, dtype=complex))

# ============================================================================
# LINK
# ============================================================================

@dataclass
class ChannelRealization:
    """One quasi-static channel use."""
    channel: np.ndarray         # Nr x Nt
    trial: int

    @property
    def nr(self) -> int:
        return self.channel.shape[0]

    @property
    def nt(self) -> int:
        return self.channel.shape[1]


class RayleighChannel:
    """
    Quasi-static block Rayleigh fading MIMO link.

    The channel stays fixed for all frames of a trial; noise is fresh per
    frame. The genie baseline uses an identity channel with the same noise.

    Attributes:
        nr: Receive antennas
        nt: Transmit antennas
        noise_variance: sigma^2 per receive antenna
    """

    def __init__(self, nr: int, nt: int, noise_variance: float = NOISE_VARIANCE):
        if not noise_variance > 0:
            raise ValueError(f"Noise variance must be positive, got {noise_variance}")
        self.nr = nr
        self.nt = nt
        self.noise_variance = noise_variance

    def realize(self, trial: int, rng: np.random.Generator) -> ChannelRealization:
        return ChannelRealization(gen_channel(self.nr, self.nt, rng), trial)

    def draw_noise(self, frames: int, rng: np.random.Generator) -> np.ndarray:
        """Noise of `frames` channel uses, shape (frames, Nr)."""
        return np.array([gen_noise(self.nr, self.noise_variance, rng) for _ in range(frames)])

    @staticmethod
    def receive(channel: np.ndarray, transmit: np.ndarray,
                noise: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        y = H x + n.

        Returns:
            (received samples, noiseless induced values H x)
        """
        induced = np.asarray(channel) @ np.asarray(transmit, dtype=complex)
        return induced + noise, induced
