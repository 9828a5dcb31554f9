"""BS watermarking: per-RIS Gold-coded streams, correlation detection.

The BS superposes one spread stream per RIS (equal power split); the UE
correlates the received chips against every registered code and picks the
RIS whose correlation magnitude, summed over payload symbols, is largest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (ChannelRealization, add_awgn, direct_channel, draw_channel,
                      effective_channel, random_phase_config, serving_phase_config)
from .geometry import Scenario, ScenarioError
from .results import AMBIGUOUS, IdentificationResult, MisidEstimate
from .sequences import GoldFamily, gold_family
from .streams import trial_rng
from .waveform import BasebandSignal, random_qpsk


class WatermarkError(ValueError):
    pass


@dataclass(frozen=True)
class WatermarkBank:
    """Spreading codes on offer plus the RIS -> code assignment."""

    codes: np.ndarray                 # (num_codes, L) bipolar chips
    code_map: dict[int, int]          # ris_id -> row of `codes`
    family: GoldFamily | None = field(default=None, repr=False)

    def __post_init__(self):
        indices = list(self.code_map.values())
        if len(set(indices)) != len(indices):
            raise WatermarkError(f"code_map must be injective, got {self.code_map}")
        for rid, idx in self.code_map.items():
            if not 0 <= idx < self.codes.shape[0]:
                raise WatermarkError(
                    f"ris {rid}: code index {idx} outside bank of {self.codes.shape[0]}")

    @property
    def code_length(self) -> int:
        return self.codes.shape[1]

    def code_for(self, ris_id: int) -> np.ndarray:
        return self.codes[self.code_map[ris_id]]

    @classmethod
    def from_family(cls, family: GoldFamily, code_map: dict[int, int]) -> "WatermarkBank":
        return cls(codes=family.codes, code_map=dict(code_map), family=family)


def bank_from_scenario(scenario: Scenario) -> WatermarkBank:
    params = dict(scenario.scheme_params["watermark"])
    m = params.get("m", 6)
    family = gold_family(m)
    code_map = {r.ris_id: scenario.signature_index(r, "watermark")
                for r in scenario.ris_list}
    return WatermarkBank.from_family(family, code_map)


def watermark_encode(scenario: Scenario, bank: WatermarkBank,
                     realization: ChannelRealization,
                     payload_symbols: np.ndarray,
                     rng: np.random.Generator) -> tuple[BasebandSignal, float]:
    """Superpose every RIS's spread stream at the UE (pre-noise).

    The serving RIS is co-phased; the others hold random fixed phases for
    the trial. Returns the received samples and the SNR reference power
    (serving-component mean power, or 1.0 in fixed-transmit-power mode).
    """
    for r in scenario.ris_list:
        if r.ris_id not in bank.code_map:
            raise WatermarkError(f"ris {r.ris_id} has no watermark code assigned")
    payload_symbols = np.asarray(payload_symbols, dtype=np.complex128)

    configs = {}
    for r in scenario.ris_list:
        if r.ris_id == scenario.serving_ris_id:
            configs[r.ris_id] = serving_phase_config(realization, r.ris_id)
        else:
            configs[r.ris_id] = random_phase_config(realization, r.ris_id, rng)
    h = effective_channel(realization, configs, scenario)

    num_ris = len(scenario.ris_list)
    split = 1.0 / math.sqrt(num_ris)
    h_direct = direct_channel(realization) if scenario.direct_path else 0.0

    samples = np.zeros(payload_symbols.shape[0] * bank.code_length, dtype=np.complex128)
    for r in scenario.ris_list:
        chips = np.kron(payload_symbols, bank.code_for(r.ris_id)) * split
        samples += (h[r.ris_id] + h_direct) * chips

    if scenario.snr_reference == "transmit":
        reference_power = 1.0
    else:
        reference_power = abs(h[scenario.serving_ris_id]) ** 2 / num_ris
    return BasebandSignal(samples), reference_power


def watermark_detect(received: BasebandSignal, bank: WatermarkBank,
                     payload_known: bool = False,
                     payload_symbols: np.ndarray | None = None) -> IdentificationResult:
    """Correlate against every registered code; verdict = argmax magnitude."""
    samples = received.samples
    L = bank.code_length
    if samples.shape[0] % L:
        raise WatermarkError(
            f"received length {samples.shape[0]} is not a multiple of code length {L}")
    num_symbols = samples.shape[0] // L
    chunks = samples.reshape(num_symbols, L)

    ris_ids = list(bank.code_map)
    refs = bank.codes[[bank.code_map[r] for r in ris_ids]]      # (C, L)
    corr = chunks @ refs.T                                       # (num_symbols, C)
    if payload_known:
        if payload_symbols is None:
            raise WatermarkError("payload_known detection needs the payload")
        z = np.abs(np.conj(payload_symbols) @ corr)
    else:
        z = np.abs(corr).sum(axis=0)

    best = float(z.max())
    winners = [rid for rid, v in zip(ris_ids, z) if v == best]
    scores = dict(zip(ris_ids, z.tolist()))
    if len(winners) != 1:
        return IdentificationResult(verdict=AMBIGUOUS, scores=scores)
    return IdentificationResult(verdict=winners[0], scores=scores)


class WatermarkRunner:
    """Per-trial pipeline bound to one scenario (used by the sweep harness)."""

    name = "watermark"

    def __init__(self, scenario: Scenario):
        if "watermark" not in scenario.scheme_params:
            raise ScenarioError("scenario has no [scheme.watermark] block")
        params = dict(scenario.scheme_params["watermark"])
        known = {"m", "num_payload_symbols", "payload_known", "power_split"}
        unknown = set(params) - known
        if unknown:
            raise ScenarioError(f"unknown key(s) {sorted(unknown)} in [scheme.watermark]")
        if params.get("power_split", "equal") != "equal":
            raise ScenarioError("only the equal power_split is implemented")
        self.scenario = scenario
        self.num_payload_symbols = int(params.get("num_payload_symbols", 2))
        if self.num_payload_symbols < 1:
            raise ScenarioError("num_payload_symbols must be >= 1")
        self.payload_known = bool(params.get("payload_known", False))
        self.bank = bank_from_scenario(scenario)

    @property
    def airtime(self) -> int:
        return self.num_payload_symbols * self.bank.code_length

    def detector_ops(self) -> int:
        """Real-multiplication tally of the detection stage (see README)."""
        num_candidates = len(self.bank.code_map)
        # complex x complex chip products: 4 real mults each; one magnitude
        # (2 mults) per candidate per symbol
        return (4 * num_candidates * self.airtime
                + 2 * num_candidates * self.num_payload_symbols)

    def run_trial(self, rng: np.random.Generator) -> IdentificationResult:
        realization = draw_channel(self.scenario, rng)
        payload = random_qpsk(self.num_payload_symbols, rng)
        signal, reference = watermark_encode(
            self.scenario, self.bank, realization, payload, rng)
        noisy = add_awgn(signal.samples, self.scenario.snr_db, reference, rng)
        return watermark_detect(BasebandSignal(noisy), self.bank,
                                payload_known=self.payload_known,
                                payload_symbols=payload if self.payload_known else None)


def misid_rate_watermark(scenario: Scenario, bank: WatermarkBank | None,
                         trials: int, seed: int) -> MisidEstimate:
    """Monte-Carlo misidentification estimate for the watermark scheme."""
    runner = WatermarkRunner(scenario)
    if bank is not None:
        runner.bank = bank
    serving = scenario.serving_ris_id
    errors = ambiguous = 0
    for t in range(trials):
        result = runner.run_trial(trial_rng(seed, 0, t))
        if result.verdict != serving:
            errors += 1
            if not result.decided:
                ambiguous += 1
    return MisidEstimate(errors=errors, trials=trials, ambiguous=ambiguous)
