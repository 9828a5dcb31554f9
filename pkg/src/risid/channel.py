"""Cascaded BS->RIS->UE channel draws, phase configurations, noise.

Small-scale fading is i.i.d. circularly-symmetric complex Gaussian per
element, hop, and tap; each hop carries the same exponential power-delay
profile normalized to unit total power, and per-tap element products compose
the cascade. Phase configurations act element-wise on the cascade.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Scenario, distance, path_loss_amplitude

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class ChannelError(ValueError):
    pass


def exponential_pdp(num_taps: int, decay: float) -> np.ndarray:
    """Tap weights proportional to exp(-t/decay), normalized to sum to 1."""
    if num_taps < 1:
        raise ChannelError("num_taps must be >= 1")
    w = np.exp(-np.arange(num_taps) / decay)
    return w / w.sum()


@dataclass(frozen=True)
class RisChannel:
    """One RIS's small-scale gains and large-scale hop amplitudes."""

    g: np.ndarray            # (N, T) BS -> element gains, tap-weighted
    f: np.ndarray            # (N, T) element -> UE gains, tap-weighted
    amp_bs_ris: float
    amp_ris_ue: float

    @property
    def large_scale(self) -> float:
        return self.amp_bs_ris * self.amp_ris_ue

    def element_response(self, subcarrier: int | None = None,
                         fft_size: int | None = None) -> np.ndarray:
        """Per-element cascade at tap 0 (default) or at one subcarrier."""
        if subcarrier is None:
            return self.g[:, 0] * self.f[:, 0]
        if fft_size is None:
            raise ChannelError("subcarrier reference needs fft_size")
        t = np.arange(self.g.shape[1])
        phases = np.exp(-2j * np.pi * subcarrier * t / fft_size)
        return (self.g * self.f) @ phases


@dataclass(frozen=True)
class ChannelRealization:
    """One trial's channels for every RIS (and the optional direct path)."""

    per_ris: dict[int, RisChannel]
    tap_weights: np.ndarray
    direct: np.ndarray | None = None   # (T,) taps, already tap-weighted
    direct_amp: float = 0.0

    def ris(self, ris_id: int) -> RisChannel:
        try:
            return self.per_ris[ris_id]
        except KeyError:
            raise ChannelError(f"realization has no ris_id {ris_id}") from None


@dataclass(frozen=True)
class PhaseConfig:
    """Element phases and on/off mask for one RIS."""

    phi: np.ndarray
    on_mask: np.ndarray

    def __post_init__(self):
        if self.phi.shape != self.on_mask.shape:
            raise ChannelError("phi and on_mask must have equal length")

    @property
    def reflection(self) -> np.ndarray:
        return np.where(self.on_mask, np.exp(1j * self.phi), 0.0)


def draw_channel(scenario: Scenario, rng: np.random.Generator) -> ChannelRealization:
    """Draw an independent realization; deterministic for a given stream."""
    T = scenario.num_delay_taps
    weights = exponential_pdp(T, scenario.pdp_decay)
    sqrt_w = np.sqrt(weights)

    sizes = [r.num_elements for r in scenario.ris_list]
    total = 2 * sum(sizes) * T + (T if scenario.direct_path else 0)
    gauss = (rng.standard_normal(2 * total).view(np.complex128) * _INV_SQRT2)

    per_ris: dict[int, RisChannel] = {}
    offset = 0
    for ris, n in zip(scenario.ris_list, sizes):
        g = gauss[offset:offset + n * T].reshape(n, T) * sqrt_w
        offset += n * T
        f = gauss[offset:offset + n * T].reshape(n, T) * sqrt_w
        offset += n * T
        a_bs, a_ue = scenario.hop_amplitudes(ris)
        per_ris[ris.ris_id] = RisChannel(g=g, f=f, amp_bs_ris=a_bs, amp_ris_ue=a_ue)

    direct = None
    direct_amp = 0.0
    if scenario.direct_path:
        direct = gauss[offset:offset + T] * sqrt_w
        direct_amp = path_loss_amplitude(
            distance(scenario.bs_position, scenario.ue_position),
            scenario.path_loss_exponent)

    return ChannelRealization(per_ris=per_ris, tap_weights=weights,
                              direct=direct, direct_amp=direct_amp)


def serving_phase_config(realization: ChannelRealization, ris_id: int,
                         subcarrier: int | None = None,
                         fft_size: int | None = None) -> PhaseConfig:
    """Co-phase every element so the referenced composite response is real-positive.

    Reference is the tap-0 cascade by default, or the response at one
    subcarrier (used by the spectral scheme at its group center).
    """
    ch = realization.ris(ris_id)
    ref = ch.element_response(subcarrier, fft_size)
    phi = np.where(np.abs(ref) > 0.0, -np.angle(ref), 0.0)
    return PhaseConfig(phi=phi, on_mask=np.ones(ch.g.shape[0], dtype=bool))


def random_phase_config(realization: ChannelRealization, ris_id: int,
                        rng: np.random.Generator) -> PhaseConfig:
    """Uniform random fixed phases (a RIS configured for some other user)."""
    n = realization.ris(ris_id).g.shape[0]
    return PhaseConfig(phi=rng.uniform(0.0, 2.0 * np.pi, size=n),
                       on_mask=np.ones(n, dtype=bool))


def off_fraction_config(base: PhaseConfig, rho: float) -> PhaseConfig:
    """Switch off the first ceil(rho * N) elements of a configuration."""
    if not 0.0 <= rho <= 1.0:
        raise ChannelError(f"off fraction must lie in [0, 1], got {rho}")
    n = base.phi.shape[0]
    mask = base.on_mask.copy()
    mask[: math.ceil(rho * n)] = False
    return PhaseConfig(phi=base.phi, on_mask=mask)


def effective_channel(realization: ChannelRealization,
                      configs: dict[int, PhaseConfig],
                      scenario: Scenario,
                      num_subcarriers: int | None = None):
    """Compose per-RIS effective channels under the given configurations.

    Returns {ris_id: value}: a complex scalar per RIS in single-carrier use
    (flat fading required), or a length-S frequency response when
    `num_subcarriers` is given. Switched-off elements contribute zero.
    """
    out = {}
    for ris in scenario.ris_list:
        rid = ris.ris_id
        if rid not in configs:
            raise ChannelError(f"missing phase config for ris_id {rid}")
        ch = realization.ris(rid)
        refl = configs[rid].reflection
        taps = ch.large_scale * (refl[:, None] * ch.g * ch.f).sum(axis=0)  # (T,)
        if num_subcarriers is None:
            if taps.shape[0] != 1:
                raise ChannelError(
                    "scalar effective channel requires flat fading (1 tap); "
                    f"got {taps.shape[0]} taps")
            out[rid] = complex(taps[0])
        else:
            out[rid] = _taps_to_response(taps, num_subcarriers)
    return out


def direct_channel(realization: ChannelRealization,
                   num_subcarriers: int | None = None):
    """Direct BS->UE term (zero when the scenario excludes that path)."""
    if realization.direct is None:
        return 0.0 if num_subcarriers is None else np.zeros(num_subcarriers, complex)
    taps = realization.direct_amp * realization.direct
    if num_subcarriers is None:
        if taps.shape[0] != 1:
            raise ChannelError("scalar direct channel requires flat fading")
        return complex(taps[0])
    return _taps_to_response(taps, num_subcarriers)


@lru_cache(maxsize=8)
def _dft_columns(num_subcarriers: int, num_taps: int) -> np.ndarray:
    s = np.arange(num_subcarriers)
    t = np.arange(num_taps)
    return np.exp(-2j * np.pi * np.outer(s, t) / num_subcarriers)


def _taps_to_response(taps: np.ndarray, num_subcarriers: int) -> np.ndarray:
    if taps.shape[0] > num_subcarriers:
        raise ChannelError(
            f"{taps.shape[0]} taps exceed DFT length {num_subcarriers}")
    return _dft_columns(num_subcarriers, taps.shape[0]) @ taps


def noise_variance(snr_db: float, reference_power: float) -> float:
    """Per-sample complex noise variance for an SNR against a reference power."""
    if reference_power <= 0.0:
        raise ChannelError(f"reference_power must be positive, got {reference_power}")
    if math.isinf(snr_db):
        return 0.0
    return reference_power / (10.0 ** (snr_db / 10.0))


def add_awgn(samples: np.ndarray, snr_db: float, reference_power: float,
             rng: np.random.Generator) -> np.ndarray:
    """Add complex white Gaussian noise; +inf SNR returns the input unchanged."""
    var = noise_variance(snr_db, reference_power)
    if var == 0.0:
        return samples
    noise = rng.standard_normal(2 * samples.shape[0]).view(np.complex128)
    return samples + noise * math.sqrt(var / 2.0)
