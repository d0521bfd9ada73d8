"""OFDM block structure, pilot layouts, power allocation and pilot waveforms."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgument

QPSK = np.exp(1j * np.pi * (0.25 + 0.5 * np.arange(4)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridConfig:
    """OFDM dimensions. Defaults are the 72-subcarrier, 9-symbol block at 30 kHz spacing."""

    K: int = 72
    L_c: int = 18
    M: int = 9
    f_s: float = 2.16e6
    f_c: float = 3.5e9

    def __post_init__(self):
        if self.K < 1 or self.M < 1 or not (0 <= self.L_c <= self.K):
            raise InvalidArgument(f"invalid grid dimensions K={self.K} L_c={self.L_c} M={self.M}")
        if not self.f_s > 0:
            raise InvalidArgument("sample rate must be positive")

    @property
    def T_s(self) -> float:
        return 1.0 / self.f_s

    @property
    def K_bar(self) -> int:
        return self.K + self.L_c

    @property
    def T_sym(self) -> float:
        return self.K_bar / self.f_s

    @property
    def spacing(self) -> float:
        """Subcarrier spacing in Hz."""
        return self.f_s / self.K

    @property
    def n_samples(self) -> int:
        return self.M * self.K_bar


@dataclass(frozen=True, eq=False)
class PilotLayout:
    """Boolean pilot mask over (symbol, subcarrier) plus unit-magnitude pilot values.

    Every resource that is not a pilot is a data resource, so the two sets are
    disjoint and exhaustive by construction.
    """

    mask: np.ndarray
    values: np.ndarray
    kind: str = "custom"
    param: int = 0

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise InvalidArgument("pilot mask must be (M, K)")
        values = np.where(mask, np.asarray(self.values, dtype=complex), 0.0)
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def M(self) -> int:
        return self.mask.shape[0]

    @property
    def K(self) -> int:
        return self.mask.shape[1]

    def pilot_indices(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.mask[m])

    def data_indices(self, m: int) -> np.ndarray:
        return np.flatnonzero(~self.mask[m])

    @cached_property
    def mixed_symbols(self) -> np.ndarray:
        """Symbols carrying both pilots and data."""
        n = self.mask.sum(axis=1)
        return np.flatnonzero((n > 0) & (n < self.K))


def _pilot_values(shape: tuple[int, int], seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return QPSK[rng.integers(0, 4, size=shape)]


def _check_grid(cfg: GridConfig):
    if not isinstance(cfg, GridConfig):
        raise InvalidArgument("expected a GridConfig")


def build_equally_spaced(cfg: GridConfig, dp_sym: int, dp_sc: int, seed: int = 0,
                         stagger: int = 0) -> PilotLayout:
    """Pilots on the lattice m = 0, dp_sym, ... and k = 0, dp_sc, ....

    ``stagger`` offsets the comb of the j-th pilot symbol by ``j*stagger``
    subcarriers (mod dp_sc). The default keeps every pilot symbol aligned.
    """
    _check_grid(cfg)
    if not (1 <= dp_sym <= cfg.M) or not (1 <= dp_sc <= cfg.K):
        raise InvalidArgument(f"pilot spacing ({dp_sym}, {dp_sc}) outside grid ({cfg.M}, {cfg.K})")
    mask = np.zeros((cfg.M, cfg.K), dtype=bool)
    for j, m in enumerate(range(0, cfg.M, dp_sym)):
        mask[m, (j * stagger) % dp_sc::dp_sc] = True
    return PilotLayout(mask, _pilot_values(mask.shape, seed), "equally_spaced", dp_sc)


def build_outer_most(cfg: GridConfig, n_p: int, seed: int = 0) -> PilotLayout:
    """Dense spacing-2 comb in symbol 0, then ``n_p`` pilots at each band edge."""
    _check_grid(cfg)
    if not (1 <= n_p <= cfg.K / 2):
        raise InvalidArgument(f"N_p={n_p} must lie in [1, K/2]")
    mask = np.zeros((cfg.M, cfg.K), dtype=bool)
    mask[0, ::2] = True
    mask[1:, :n_p] = True
    mask[1:, cfg.K - n_p:] = True
    return PilotLayout(mask, _pilot_values(mask.shape, seed), "outer_most", n_p)


@dataclass(frozen=True, eq=False)
class PowerMap:
    """Per-resource second moment of the transmitted symbols."""

    power: np.ndarray
    alpha: float
    p_total: float

    def __post_init__(self):
        object.__setattr__(self, "power", _frozen(np.asarray(self.power, dtype=float)))


def allocate_power(layout: PilotLayout, alpha: float, p_total: float = 1.0) -> PowerMap:
    """Split ``p_total`` per symbol: ``alpha`` to data and ``1 - alpha`` to pilots in mixed symbols."""
    if not (0.0 < alpha < 1.0):
        raise InvalidArgument(f"alpha={alpha} must lie in (0, 1)")
    if not p_total > 0:
        raise InvalidArgument("p_total must be positive")
    mask = layout.mask
    n_pil = mask.sum(axis=1, keepdims=True)
    n_dat = layout.K - n_pil
    mixed = (n_pil > 0) & (n_dat > 0)
    pil_share = np.where(mixed, 1.0 - alpha, 1.0)
    dat_share = np.where(mixed, alpha, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(mask, pil_share * p_total / n_pil, dat_share * p_total / n_dat)
    return PowerMap(p, alpha, p_total)


def uniform_alpha(layout: PilotLayout) -> float:
    """Data fraction giving every resource of a mixed symbol the same power."""
    mixed = layout.mixed_symbols
    if mixed.size == 0:
        raise InvalidArgument("layout has no mixed symbols")
    n_dat = layout.K - layout.mask[mixed].sum(axis=1)
    if np.unique(n_dat).size != 1:
        raise InvalidArgument("mixed symbols have different pilot counts")
    return float(n_dat[0]) / layout.K


def resource_symbols(layout: PilotLayout, power: PowerMap, data: np.ndarray | None = None) -> np.ndarray:
    """Assemble the scaled (M, K) modulation grid: pilots from the layout, data from ``data``."""
    unit = np.asarray(layout.values, dtype=complex)
    if data is not None:
        unit = np.where(layout.mask, unit, np.asarray(data, dtype=complex))
    return np.sqrt(power.power) * unit


@dataclass(frozen=True, eq=False)
class PilotWaveform:
    freq: np.ndarray  # (M, K), zero on data resources
    time: np.ndarray  # (M, K), inverse DFT of freq

    def toeplitz(self, m: int, n_taps: int) -> np.ndarray:
        """(K, n_taps) matrix whose column l is the pilot of symbol m circularly delayed by l."""
        return np.stack([np.roll(self.time[m], l) for l in range(n_taps)], axis=1)

    @property
    def energy(self) -> np.ndarray:
        """Per-subcarrier pilot energy summed over symbols."""
        return np.sum(np.abs(self.freq) ** 2, axis=0)


def pilot_waveform(layout: PilotLayout, power: PowerMap) -> PilotWaveform:
    if power.power.shape != layout.mask.shape:
        raise InvalidArgument("layout and power map shapes differ")
    freq = np.where(layout.mask, resource_symbols(layout, power), 0.0)
    return PilotWaveform(_frozen(freq), _frozen(np.fft.ifft(freq, axis=-1)))


def modulate(symbols: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Inverse DFT of each (M, K) row with a cyclic prefix, serialised to M*K_bar samples."""
    symbols = np.asarray(symbols, dtype=complex)
    body = np.fft.ifft(symbols, axis=-1)
    return np.concatenate([body[:, cfg.K - cfg.L_c:], body], axis=1).reshape(-1)


def demodulate(x: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Strip cyclic prefixes and take the DFT. Leading axes (antennas) are kept."""
    x = np.asarray(x)
    blocks = x.reshape(x.shape[:-1] + (cfg.M, cfg.K_bar))[..., cfg.L_c:]
    return np.fft.fft(blocks, axis=-1)


def transmit_signal(layout: PilotLayout, power: PowerMap, data_symbols: np.ndarray,
                    cfg: GridConfig) -> np.ndarray:
    """Time-domain block carrying pilots and unit-power ``data_symbols`` at the allocated powers."""
    return modulate(resource_symbols(layout, power, data_symbols), cfg)
