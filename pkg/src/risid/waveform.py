"""Baseband symbol layer: QPSK mapping and the cyclic-prefix DFT modulator.

All transforms use the unitary normalization, so time- and frequency-domain
energies match (Parseval) and noise statistics are preserved either side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class MultiCarrierFraming:
    num_subcarriers: int
    num_symbols: int
    cp_len: int

    def __post_init__(self):
        if self.num_subcarriers < 1 or self.num_symbols < 1:
            raise WaveformError("framing dimensions must be positive")
        if not 0 <= self.cp_len < self.num_subcarriers:
            raise WaveformError(
                f"cp_len must satisfy 0 <= cp < S, got cp={self.cp_len}, S={self.num_subcarriers}")

    @property
    def samples_per_symbol(self) -> int:
        return self.num_subcarriers + self.cp_len

    @property
    def total_samples(self) -> int:
        return self.num_symbols * self.samples_per_symbol


@dataclass(frozen=True)
class BasebandSignal:
    """Complex baseband samples; framing is None for single-carrier chips."""

    samples: np.ndarray
    framing: MultiCarrierFraming | None = None

    def __post_init__(self):
        if self.framing is not None and self.samples.shape[0] != self.framing.total_samples:
            raise WaveformError(
                f"samples length {self.samples.shape[0]} does not match framing "
                f"({self.framing.total_samples} expected)")


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK: bit pair (b0, b1) -> ((1-2b0)+j(1-2b1))/sqrt(2)."""
    bits = np.asarray(bits)
    if bits.shape[0] % 2:
        raise WaveformError(f"qpsk needs an even bit count, got {bits.shape[0]}")
    b = bits.reshape(-1, 2)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) / _SQRT2


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision inverse of qpsk_map."""
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.shape[0], 2), dtype=np.int8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.reshape(-1)


def random_qpsk(n: int, rng: np.random.Generator) -> np.ndarray:
    """n unit-energy QPSK symbols drawn uniformly."""
    return qpsk_map(rng.integers(0, 2, size=2 * n))


def ofdm_modulate(grid: np.ndarray, cp_len: int) -> BasebandSignal:
    """Unitary inverse DFT per symbol column plus cyclic prefix.

    `grid` has shape (S, M): one column of S subcarrier values per symbol.
    """
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.ndim != 2:
        raise WaveformError("grid must be a 2-D (subcarriers x symbols) array")
    S, M = grid.shape
    framing = MultiCarrierFraming(S, M, cp_len)
    time = np.fft.ifft(grid, axis=0, norm="ortho")
    with_cp = np.concatenate([time[S - cp_len:, :], time], axis=0) if cp_len else time
    return BasebandSignal(with_cp.reshape(-1, order="F").copy(), framing)


def ofdm_demodulate(signal: BasebandSignal) -> np.ndarray:
    """Strip prefixes and apply the unitary forward DFT per symbol."""
    if signal.framing is None:
        raise WaveformError("signal has no multi-carrier framing")
    f = signal.framing
    blocks = signal.samples.reshape(f.samples_per_symbol, f.num_symbols, order="F")
    return np.fft.fft(blocks[f.cp_len:, :], axis=0, norm="ortho")


def apply_fir(signal: BasebandSignal, taps: np.ndarray) -> BasebandSignal:
    """Pass samples through an FIR channel (linear convolution, trimmed).

    Reference time-domain path used to validate the per-subcarrier model.
    """
    out = np.convolve(signal.samples, np.asarray(taps, dtype=np.complex128))
    return BasebandSignal(out[: signal.samples.shape[0]], signal.framing)
