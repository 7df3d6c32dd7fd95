"""Traditional Wiener-filter noise suppressor.

Per-bin chain: recursive noise-power tracking with a minimum-statistics
safety floor, a posteriori SNR, decision-directed a priori SNR, and the
Wiener gain G = xi/(xi+1) limited below by the maximum-attenuation floor.
Gains are real, so the enhanced spectrum keeps the input phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-12

# First-order smoothing applied to the power track feeding the
# minimum-statistics window.
MINSTAT_SMOOTH = 0.9
# Fixed compensation for the low bias of a windowed minimum.
MINSTAT_BIAS = 1.5


@dataclass
class SuppressorConfig:
    max_atten_db: float = 12.0
    alpha_dd: float = 0.98        # decision-directed weight
    alpha_noise: float = 0.85     # noise update when the bin looks like noise
    alpha_speech: float = 0.99    # noise update when the bin looks like speech
    minstat_window_s: float = 1.5
    seed_frames: int = 5          # initial frames averaged into the noise seed
    dd_prev_gamma: bool = False   # use gamma(t-1) in the first DD term

    def __post_init__(self):
        if self.max_atten_db <= 0:
            raise ValueError("max_atten_db must be positive")
        for name in ("alpha_dd", "alpha_noise", "alpha_speech"):
            a = getattr(self, name)
            if not 0.0 < a < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def g_min(self) -> float:
        return 10.0 ** (-self.max_atten_db / 20.0)


def a_posteriori_snr(power: np.ndarray, noise_psd: np.ndarray) -> np.ndarray:
    """gamma = |X|^2 / |N|^2 with the noise floor clamped at EPS."""
    return np.asarray(power) / np.maximum(noise_psd, EPS)


def decision_directed_xi(gamma: np.ndarray, prev_gain: np.ndarray,
                         alpha_dd: float,
                         prev_gamma: np.ndarray | None = None) -> np.ndarray:
    """Blend the previous gain-weighted SNR with the instantaneous SNR.

    The first term uses the current-frame gamma by default; pass `prev_gamma`
    to reproduce the original formulation with gamma(t-1).
    """
    gamma_w = gamma if prev_gamma is None else prev_gamma
    return (alpha_dd * prev_gain ** 2 * gamma_w
            + (1.0 - alpha_dd) * np.maximum(gamma - 1.0, 0.0))


def wiener_gain(xi: np.ndarray, g_min: float) -> np.ndarray:
    return np.maximum(xi / (xi + 1.0), g_min)


class SuppressorState:
    """Per-stream state: noise PSD, previous gain/gamma, min-statistics ring."""

    def __init__(self, config: SuppressorConfig | None = None,
                 n_bins: int = 513, frame_rate: float = 100.0):
        self.config = config or SuppressorConfig()
        self.n_bins = n_bins
        self.noise_psd = np.zeros(n_bins)
        self.prev_gain = np.ones(n_bins)
        self.prev_gamma = np.ones(n_bins)
        self.frames_seen = 0
        self._seed_sum = np.zeros(n_bins)
        self._smoothed = np.zeros(n_bins)
        win = max(1, int(round(self.config.minstat_window_s * frame_rate)))
        self._ring = np.full((win, n_bins), np.inf)
        self._ring_pos = 0

    def _minstat_floor(self, power: np.ndarray) -> np.ndarray:
        self._smoothed = (MINSTAT_SMOOTH * self._smoothed
                          + (1.0 - MINSTAT_SMOOTH) * power)
        self._ring[self._ring_pos] = self._smoothed
        self._ring_pos = (self._ring_pos + 1) % len(self._ring)
        return MINSTAT_BIAS * np.min(self._ring, axis=0)

    def update_noise_psd(self, power: np.ndarray) -> np.ndarray:
        power = np.asarray(power, dtype=np.float64)
        if np.any(power < 0):
            raise ValueError("power spectrum must be non-negative")
        floor = self._minstat_floor(power)
        self.frames_seen += 1
        if self.frames_seen <= self.config.seed_frames:
            self._seed_sum += power
            self.noise_psd = self._seed_sum / self.frames_seen
        else:
            # Fast tracking where the frame looks like noise, near-frozen
            # where it looks like speech; the min-stat floor prevents the
            # estimate from locking up far below the true noise level.
            is_noise = power <= 3.0 * self.noise_psd
            alpha = np.where(is_noise, self.config.alpha_noise,
                             self.config.alpha_speech)
            recursed = alpha * self.noise_psd + (1.0 - alpha) * power
            self.noise_psd = np.maximum(recursed, floor)
        return self.noise_psd

    def suppress_frame(self, spectrum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Update state from one spectrum; return (gains, enhanced spectrum)."""
        spectrum = np.asarray(spectrum)
        if spectrum.shape != (self.n_bins,):
            raise ValueError(f"suppress_frame expects {self.n_bins} bins, "
                             f"got {spectrum.shape}")
        power = np.abs(spectrum) ** 2
        self.update_noise_psd(power)
        gamma = a_posteriori_snr(power, self.noise_psd)
        xi = decision_directed_xi(
            gamma, self.prev_gain, self.config.alpha_dd,
            prev_gamma=self.prev_gamma if self.config.dd_prev_gamma else None)
        gains = wiener_gain(xi, self.config.g_min)
        self.prev_gain = gains
        self.prev_gamma = gamma
        return gains, spectrum * gains
