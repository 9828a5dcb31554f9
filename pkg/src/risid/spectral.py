"""Spectral fingerprinting: per-RIS subcarrier-group boosting and detection.

Every engaged RIS co-phases its elements toward the center subcarrier of its
assigned group; under frequency-selective fading this concentrates received
power there. The UE averages per-group power over the OFDM grid and either
picks the dominant registered group or thresholds an engaged set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelRealization, PhaseConfig, add_awgn, direct_channel,
                      draw_channel, effective_channel, serving_phase_config)
from .geometry import Scenario, ScenarioError
from .results import AMBIGUOUS, IdentificationResult
from .waveform import BasebandSignal, MultiCarrierFraming, ofdm_demodulate, ofdm_modulate


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class GroupAssignment:
    """Static network-wide map from RIS to a contiguous subcarrier group."""

    num_subcarriers: int
    group_size: int
    groups: dict[int, tuple[int, int]]   # ris_id -> (start, stop)

    def __post_init__(self):
        if self.num_subcarriers % self.group_size:
            raise SpectralError(
                f"S = {self.num_subcarriers} not divisible by group_size {self.group_size}")
        seen = set()
        for rid, (start, stop) in self.groups.items():
            if stop - start != self.group_size:
                raise SpectralError(f"ris {rid}: group length {stop - start} != {self.group_size}")
            if start % self.group_size or stop > self.num_subcarriers or start < 0:
                raise SpectralError(f"ris {rid}: group ({start}, {stop}) not on the grid")
            span = range(start, stop)
            if seen & set(span):
                raise SpectralError(f"ris {rid}: group overlaps another assignment")
            seen |= set(span)

    @property
    def num_groups(self) -> int:
        return self.num_subcarriers // self.group_size

    def center(self, ris_id: int) -> int:
        start, _ = self.groups[ris_id]
        return start + self.group_size // 2

    def group_slice(self, ris_id: int) -> slice:
        start, stop = self.groups[ris_id]
        return slice(start, stop)


def assignment_from_scenario(scenario: Scenario, num_subcarriers: int,
                             group_size: int) -> GroupAssignment:
    groups = {}
    for r in scenario.ris_list:
        idx = scenario.signature_index(r, "spectral")
        if not 0 <= idx < num_subcarriers // max(1, group_size):
            raise ScenarioError(
                f"ris {r.ris_id}: spectral group index {idx} outside the "
                f"{num_subcarriers // max(1, group_size)} available groups")
        groups[r.ris_id] = (idx * group_size, (idx + 1) * group_size)
    return GroupAssignment(num_subcarriers, group_size, groups)


def spectral_encode(scenario: Scenario, assignment: GroupAssignment,
                    realization: ChannelRealization, num_symbols: int,
                    rng: np.random.Generator,
                    engaged: list[int] | None = None,
                    cp_len: int = 16,
                    out_of_group_null: bool = False,
                    dither: float = np.pi / 2) -> tuple[BasebandSignal, float]:
    """Superposed OFDM signal at the UE (pre-noise) and the SNR reference power.

    The BS sends unit-power random QPSK on every subcarrier; each engaged RIS
    is co-phased at its own group center. `out_of_group_null` additionally
    dithers element phases per symbol (an extension that decorrelates
    out-of-group subcarriers across symbols; off by default).
    """
    S = assignment.num_subcarriers
    engaged_ids = [r.ris_id for r in scenario.ris_list] if engaged is None else list(engaged)
    for rid in engaged_ids:
        if rid not in assignment.groups:
            raise SpectralError(f"engaged ris {rid} has no subcarrier group")

    grid = (rng.integers(0, 2, size=(S, num_symbols)) * 2 - 1
            + 1j * (rng.integers(0, 2, size=(S, num_symbols)) * 2 - 1)) / np.sqrt(2.0)

    configs = {rid: serving_phase_config(realization, rid,
                                         subcarrier=assignment.center(rid),
                                         fft_size=S)
               for rid in engaged_ids}

    if not out_of_group_null:
        h_total = np.zeros(S, dtype=np.complex128)
        h_serving = np.zeros(S, dtype=np.complex128)
        if engaged_ids:
            responses = _responses(realization, configs, scenario, engaged_ids, S)
            for rid, resp in responses.items():
                h_total += resp
                if rid == scenario.serving_ris_id:
                    h_serving = resp
        h_total = h_total + (direct_channel(realization, S) if scenario.direct_path else 0.0)
        received = h_total[:, None] * grid
    else:
        received = np.zeros((S, num_symbols), dtype=np.complex128)
        h_serving = np.zeros(S, dtype=np.complex128)
        for j in range(num_symbols):
            h_j = np.zeros(S, dtype=np.complex128)
            dithered = {}
            for rid in engaged_ids:
                base = configs[rid]
                jitter = rng.uniform(-dither, dither, size=base.phi.shape[0])
                dithered[rid] = PhaseConfig(phi=base.phi + jitter, on_mask=base.on_mask)
            responses = _responses(realization, dithered, scenario, engaged_ids, S)
            for rid, resp in responses.items():
                h_j += resp
                if rid == scenario.serving_ris_id:
                    h_serving += resp / num_symbols
            h_j = h_j + (direct_channel(realization, S) if scenario.direct_path else 0.0)
            received[:, j] = h_j * grid[:, j]

    signal = ofdm_modulate(received, cp_len)
    if scenario.snr_reference == "transmit":
        reference = 1.0
    else:
        reference = float(np.mean(np.abs(h_serving) ** 2))
        if reference == 0.0:
            reference = 1.0  # serving not engaged: fall back to transmit reference
    return signal, reference


def _responses(realization, configs, scenario, engaged_ids, S):
    """Per-subcarrier responses of the engaged RISs (others fully off)."""
    full_configs = dict(configs)
    for r in scenario.ris_list:
        if r.ris_id not in full_configs:
            n = realization.ris(r.ris_id).g.shape[0]
            full_configs[r.ris_id] = PhaseConfig(phi=np.zeros(n),
                                                 on_mask=np.zeros(n, dtype=bool))
    full = effective_channel(realization, full_configs, scenario, num_subcarriers=S)
    return {rid: full[rid] for rid in engaged_ids}


def spectral_detect(received: BasebandSignal, assignment: GroupAssignment,
                    mode: str = "dominant",
                    threshold_factor: float = 2.0) -> IdentificationResult:
    """Average per-group power over the grid and rank the registered groups."""
    if received.framing is None:
        raise SpectralError("spectral detection needs multi-carrier framing")
    if received.framing.num_subcarriers != assignment.num_subcarriers:
        raise SpectralError(
            f"framing has {received.framing.num_subcarriers} subcarriers, "
            f"assignment expects {assignment.num_subcarriers}")
    if mode not in ("dominant", "engaged_set"):
        raise SpectralError(f"unknown detection mode '{mode}'")

    grid = ofdm_demodulate(received)
    power = np.abs(grid) ** 2
    gs = assignment.group_size
    group_power = power.reshape(assignment.num_groups, gs, -1).mean(axis=(1, 2))

    scores = {rid: float(group_power[start // gs])
              for rid, (start, _) in assignment.groups.items()}
    if mode == "engaged_set":
        floor = float(np.median(group_power))
        engaged = frozenset(rid for rid, p in scores.items()
                            if p > threshold_factor * floor)
        best = max(scores.values())
        winners = [rid for rid, p in scores.items() if p == best]
        verdict = winners[0] if len(winners) == 1 and winners[0] in engaged else AMBIGUOUS
        return IdentificationResult(verdict=verdict, scores=scores, engaged=engaged)

    best = max(scores.values())
    winners = [rid for rid, p in scores.items() if p == best]
    if len(winners) != 1:
        return IdentificationResult(verdict=AMBIGUOUS, scores=scores)
    return IdentificationResult(verdict=winners[0], scores=scores)


class SpectralRunner:
    """Per-trial pipeline bound to one scenario."""

    name = "spectral"

    def __init__(self, scenario: Scenario):
        if "spectral" not in scenario.scheme_params:
            raise ScenarioError("scenario has no [scheme.spectral] block")
        if scenario.waveform != "multi_carrier":
            raise ScenarioError(
                "spectral fingerprinting requires a multi-carrier scenario "
                "(waveform = 'multi_carrier')")
        params = dict(scenario.scheme_params["spectral"])
        known = {"S", "group_size", "M", "mode", "threshold_factor",
                 "num_delay_taps", "cp_len", "out_of_group_null"}
        unknown = set(params) - known
        if unknown:
            raise ScenarioError(f"unknown key(s) {sorted(unknown)} in [scheme.spectral]")
        self.S = int(params.get("S", 64))
        self.group_size = int(params.get("group_size", 8))
        self.M = int(params.get("M", 8))
        self.cp_len = int(params.get("cp_len", 16))
        self.mode = str(params.get("mode", "dominant"))
        self.threshold_factor = float(params.get("threshold_factor", 2.0))
        self.out_of_group_null = bool(params.get("out_of_group_null", False))
        if self.M < 1:
            raise ScenarioError("M must be >= 1")
        if "num_delay_taps" in params:
            scenario = scenario.with_updates(num_delay_taps=int(params["num_delay_taps"]))
        self.scenario = scenario
        self.assignment = assignment_from_scenario(scenario, self.S, self.group_size)

    @property
    def airtime(self) -> int:
        return self.M * (self.S + self.cp_len)

    def detector_ops(self) -> int:
        """Real-multiplication tally of the detection stage (see README)."""
        # radix-2 FFT (2 S log2 S real mults) plus |Y|^2 (2 mults each) per
        # symbol, and one normalization per group
        fft_mults = 2 * self.S * int(np.log2(self.S))
        return self.M * (fft_mults + 2 * self.S) + self.assignment.num_groups

    def run_trial(self, rng: np.random.Generator) -> IdentificationResult:
        realization = draw_channel(self.scenario, rng)
        signal, reference = spectral_encode(
            self.scenario, self.assignment, realization, self.M, rng,
            cp_len=self.cp_len, out_of_group_null=self.out_of_group_null)
        noisy = add_awgn(signal.samples, self.scenario.snr_db, reference, rng)
        return spectral_detect(BasebandSignal(noisy, signal.framing),
                               self.assignment, self.mode, self.threshold_factor)
