"""Joint ranging and communication bounds for OFDM pilot designs."""
from .channel import ChannelSpec, average_snr, noise_var_for_snr
from .grid import (GridConfig, allocate_power, build_equally_spaced, build_outer_most,
                   pilot_waveform, transmit_signal)

__version__ = "0.1.0"
