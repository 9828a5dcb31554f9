"""Amplitude modulation sequence identification.

The serving RIS keys its elements on/off across symbol slots to spell out a
binary codeword; the UE thresholds per-slot received power against two
calibration slots (all-on, all-off) and decodes the nearest codeword.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelRealization, add_awgn, direct_channel, draw_channel,
                      effective_channel, off_fraction_config, random_phase_config,
                      serving_phase_config)
from .geometry import Scenario, ScenarioError
from .results import AMBIGUOUS, NONE, IdentificationResult
from .waveform import BasebandSignal, random_qpsk


class AmpModError(ValueError):
    pass


@dataclass(frozen=True)
class AmpModCodebook:
    """Registered on/off codewords, slot sizing, and keying depth."""

    codewords: dict[int, np.ndarray]   # ris_id -> (L,) bits
    slot_length: int
    rho: float = 1.0                   # fraction of elements switched off for bit 0
    d_min: int = 2

    def __post_init__(self):
        if self.slot_length < 1:
            raise AmpModError("slot_length must be >= 1")
        if not 0.0 < self.rho <= 1.0:
            raise AmpModError(f"rho must lie in (0, 1], got {self.rho}")
        words = list(self.codewords.values())
        if not words:
            raise AmpModError("codebook is empty")
        lengths = {w.shape[0] for w in words}
        if len(lengths) != 1:
            raise AmpModError("codewords must share one length")
        L = lengths.pop()
        if L < math.ceil(math.log2(max(2, len(words)))):
            raise AmpModError(f"codeword length {L} cannot address {len(words)} RISs")
        for i, a in enumerate(words):
            for b in words[i + 1:]:
                d = int(np.sum(a != b))
                if d < self.d_min:
                    raise AmpModError(
                        f"codeword pair at Hamming distance {d} < d_min {self.d_min}")

    @property
    def length(self) -> int:
        return next(iter(self.codewords.values())).shape[0]

    @property
    def num_slots(self) -> int:
        return self.length + 2  # two pilot slots prepended


def generate_codewords(count: int, length: int | None = None,
                       d_min: int = 2) -> list[np.ndarray]:
    """Parity-extended binary IDs, block-repeated to reach `length`.

    One block is the binary ID plus an even-parity bit (distance 2); full
    repeats multiply the distance. The codebook constructor re-checks d_min.
    """
    if count < 1:
        raise AmpModError("need at least one codeword")
    id_bits = max(1, math.ceil(math.log2(count))) if count > 1 else 1
    block = id_bits + 1
    if length is None:
        repeats = max(1, math.ceil(d_min / 2))
        length = block * repeats
    if length < block:
        raise AmpModError(f"length {length} shorter than one parity block ({block})")
    words = []
    for i in range(count):
        bits = [(i >> (id_bits - 1 - k)) & 1 for k in range(id_bits)]
        bits.append(sum(bits) % 2)
        full = (bits * math.ceil(length / block))[:length]
        words.append(np.array(full, dtype=np.int8))
    return words


def codebook_from_scenario(scenario: Scenario) -> AmpModCodebook:
    params = dict(scenario.scheme_params["ampmod"])
    known = {"L", "slot_length", "rho", "d_min"}
    unknown = set(params) - known
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in [scheme.ampmod]")
    d_min = int(params.get("d_min", 2))
    count = len(scenario.ris_list)
    words = generate_codewords(count, params.get("L"), d_min)
    codewords = {}
    for r in scenario.ris_list:
        idx = scenario.signature_index(r, "ampmod")
        if not 0 <= idx < count:
            raise ScenarioError(
                f"ris {r.ris_id}: ampmod codeword index {idx} outside 0..{count - 1}")
        codewords[r.ris_id] = words[idx]
    if len({w.tobytes() for w in codewords.values()}) != len(codewords):
        raise ScenarioError("ampmod codeword indices must be distinct per RIS")
    return AmpModCodebook(codewords=codewords,
                          slot_length=int(params.get("slot_length", 16)),
                          rho=float(params.get("rho", 1.0)),
                          d_min=d_min)


def ampmod_encode(ris_id: int, codebook: AmpModCodebook,
                  realization: ChannelRealization, scenario: Scenario,
                  rng: np.random.Generator) -> tuple[BasebandSignal, float]:
    """Received samples (pre-noise) for the serving RIS keying its codeword.

    Slot order: all-on pilot, all-off pilot, then one slot per codeword bit.
    Non-serving RISs hold random fixed phases throughout.
    """
    if ris_id not in codebook.codewords:
        raise AmpModError(f"ris {ris_id} is not registered in the codebook")
    word = codebook.codewords[ris_id]

    on_config = serving_phase_config(realization, ris_id)
    off_config = off_fraction_config(on_config, codebook.rho)
    others = {}
    for r in scenario.ris_list:
        if r.ris_id != ris_id:
            others[r.ris_id] = random_phase_config(realization, r.ris_id, rng)

    h_on = effective_channel(realization, {**others, ris_id: on_config}, scenario)
    h_off = effective_channel(realization, {**others, ris_id: off_config}, scenario)
    background = sum(v for k, v in h_on.items() if k != ris_id)
    background += direct_channel(realization) if scenario.direct_path else 0.0
    level = {1: h_on[ris_id] + background, 0: h_off[ris_id] + background}

    slots = [1, 0] + word.tolist()
    chips = random_qpsk(len(slots) * codebook.slot_length, rng)
    gains = np.repeat([level[b] for b in slots], codebook.slot_length)
    reference = abs(h_on[ris_id]) ** 2 if scenario.snr_reference == "serving" else 1.0
    return BasebandSignal(gains * chips), reference


def ampmod_detect(received: BasebandSignal,
                  codebook: AmpModCodebook) -> IdentificationResult:
    """Threshold per-slot power at the pilot midpoint, decode nearest codeword."""
    samples = received.samples
    expected = codebook.num_slots * codebook.slot_length
    if samples.shape[0] < expected:
        raise AmpModError(
            f"signal has {samples.shape[0]} samples; pilots + codeword need {expected}")
    power = (np.abs(samples[:expected]) ** 2).reshape(
        codebook.num_slots, codebook.slot_length).mean(axis=1)
    threshold = 0.5 * (power[0] + power[1])
    bits = (power[2:] > threshold).astype(np.int8)

    distances = {rid: int(np.sum(bits != w)) for rid, w in codebook.codewords.items()}
    best = min(distances.values())
    winners = [rid for rid, d in distances.items() if d == best]
    if len(winners) != 1:
        return IdentificationResult(verdict=AMBIGUOUS, scores=distances)
    if best > (codebook.d_min - 1) // 2:
        return IdentificationResult(verdict=NONE, scores=distances)
    return IdentificationResult(verdict=winners[0], scores=distances)


class AmpModRunner:
    """Per-trial pipeline bound to one scenario."""

    name = "ampmod"

    def __init__(self, scenario: Scenario):
        if "ampmod" not in scenario.scheme_params:
            raise ScenarioError("scenario has no [scheme.ampmod] block")
        self.scenario = scenario
        self.codebook = codebook_from_scenario(scenario)

    @property
    def airtime(self) -> int:
        return self.codebook.num_slots * self.codebook.slot_length

    def detector_ops(self) -> int:
        """Real-multiplication tally of the detection stage (see README)."""
        # |y|^2 per sample (2 mults), one per-slot normalization, midpoint
        return 2 * self.airtime + self.codebook.num_slots + 1

    def run_trial(self, rng: np.random.Generator) -> IdentificationResult:
        realization = draw_channel(self.scenario, rng)
        signal, reference = ampmod_encode(
            self.scenario.serving_ris_id, self.codebook, realization,
            self.scenario, rng)
        noisy = add_awgn(signal.samples, self.scenario.snr_db, reference, rng)
        return ampmod_detect(BasebandSignal(noisy), self.codebook)
