"""Channel models, realizations and the SNR convention.

Noise variances handed to this module are per complex time-domain sample.
With the unnormalised receive DFT, each frequency bin then carries ``K``
times that variance; :func:`freq_noise_var` does the conversion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Block-fading channel seen by ``n_rx`` antennas.

    ``tap_var`` is the total power-delay profile. Each antenna receives a copy
    scaled by ``1/n_rx`` so that diversity, not array gain, is what MRC adds.
    """

    kind: str
    tap_var: np.ndarray
    n_rx: int = 1
    gain: complex = 1.0

    def __post_init__(self):
        tv = np.atleast_1d(np.asarray(self.tap_var, dtype=float))
        if self.kind not in ("awgn", "rayleigh"):
            raise InvalidArgument(f"unknown channel kind {self.kind!r}")
        if np.any(tv < 0) or not np.any(tv > 0):
            raise InvalidArgument("tap variances must be nonnegative with one positive")
        if self.n_rx < 1:
            raise InvalidArgument("n_rx must be at least 1")
        tv.setflags(write=False)
        object.__setattr__(self, "tap_var", tv)

    @classmethod
    def awgn(cls, gain: complex = 1.0, n_rx: int = 1) -> "ChannelSpec":
        return cls("awgn", [abs(gain) ** 2], n_rx, gain)

    @classmethod
    def rayleigh(cls, order: int = 0, total: float = 1.0, n_rx: int = 1,
                 profile: np.ndarray | None = None) -> "ChannelSpec":
        """Rayleigh taps ``0..order``; uniform profile unless ``profile`` is given."""
        if profile is None:
            profile = np.full(order + 1, total / (order + 1))
        return cls("rayleigh", profile, n_rx)

    @property
    def L(self) -> int:
        return self.tap_var.size - 1

    @property
    def L_bar(self) -> int:
        return self.tap_var.size

    @property
    def total_power(self) -> float:
        return float(self.tap_var.sum())

    @property
    def antenna_tap_var(self) -> np.ndarray:
        return self.tap_var / self.n_rx

    @property
    def antenna_power(self) -> float:
        """E|h~[k]|^2 seen by a single antenna."""
        return self.total_power / self.n_rx


def freq_basis(K: int, n_taps: int) -> np.ndarray:
    """(K, n_taps) matrix with entries exp(-j 2 pi k l / K)."""
    k = np.arange(K)[:, None]
    l = np.arange(n_taps)[None, :]
    return np.exp(-2j * np.pi * k * l / K)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    taps: np.ndarray  # (n_rx, L_bar)
    spec: ChannelSpec

    def freq_response(self, K: int) -> np.ndarray:
        return self.taps @ freq_basis(K, self.taps.shape[-1]).T

    def gamma(self, K: int) -> np.ndarray:
        return np.abs(self.freq_response(K)) ** 2 / self.spec.antenna_power


def draw_taps(spec: ChannelSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Tap draws of shape ``(size, n_rx, L_bar)`` (leading axis dropped when ``size`` is None)."""
    shape = (1 if size is None else size, spec.n_rx, spec.L_bar)
    if spec.kind == "awgn":
        h = np.full(shape, spec.gain / np.sqrt(spec.n_rx), dtype=complex)
    else:
        sd = np.sqrt(spec.antenna_tap_var / 2)
        h = sd * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return h[0] if size is None else h


def draw_realization(spec: ChannelSpec, rng: np.random.Generator) -> ChannelRealization:
    return ChannelRealization(draw_taps(spec, rng), spec)


def freq_noise_var(noise_var: float, K: int) -> float:
    return K * noise_var


def average_snr(spec: ChannelSpec, p_total: float, noise_var: float, K: int) -> float:
    """Per-resource SNR P_total * sum(tap_var) / (K * sigma_v~^2) as a linear ratio."""
    if not noise_var > 0:
        raise InvalidArgument("noise variance must be positive")
    return p_total * spec.total_power / (K * freq_noise_var(noise_var, K))


def noise_var_for_snr(snr_db: float, spec: ChannelSpec, p_total: float, K: int) -> float:
    """Time-domain noise variance that yields ``snr_db`` under :func:`average_snr`."""
    return p_total * spec.total_power / (K * K * 10 ** (snr_db / 10))


def complex_noise(rng: np.random.Generator, var: float, shape) -> np.ndarray:
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(w: np.ndarray, real: ChannelRealization, noise_var: float,
                  rng: np.random.Generator | None, cp_len: int) -> np.ndarray:
    """Convolve ``w`` with each antenna's taps and add noise. Returns (n_rx, len(w))."""
    if real.taps.shape[-1] > cp_len:
        raise InvalidArgument(f"channel length {real.taps.shape[-1]} exceeds cyclic prefix {cp_len}")
    n = w.size
    x = np.stack([np.convolve(w, h)[:n] for h in real.taps])
    if noise_var > 0:
        x = x + complex_noise(rng, noise_var, x.shape)
    return x
