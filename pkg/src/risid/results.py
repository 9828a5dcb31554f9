"""Detector verdicts and misidentification-rate estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

# Sentinel verdicts. AMBIGUOUS marks detector ties, NONE marks an undecidable
# reading (e.g. codeword distance beyond the correction radius); both count
# as misidentifications.
AMBIGUOUS = "ambiguous"
NONE = "none"

_Z95 = 1.959963984540054  # normal 97.5% quantile


@dataclass(frozen=True)
class IdentificationResult:
    """One trial's verdict: a ris_id, AMBIGUOUS, or NONE."""

    verdict: int | str
    scores: dict = field(default_factory=dict, compare=False)
    engaged: frozenset = frozenset()

    @property
    def decided(self) -> bool:
        return isinstance(self.verdict, int)


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= errors <= trials:
        raise ValueError(f"errors {errors} outside [0, {trials}]")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class MisidEstimate:
    """Aggregated misidentification rate with a 95% Wilson interval.

    `errors` counts every trial whose verdict differed from the serving RIS,
    including undecided verdicts; `ambiguous` reports how many of those were
    undecided (ties or NONE).
    """

    errors: int
    trials: int
    ambiguous: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.ambiguous <= self.errors <= self.trials:
            raise ValueError(
                f"need 0 <= ambiguous ({self.ambiguous}) <= errors ({self.errors})"
                f" <= trials ({self.trials})")

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials)

    @property
    def ci95_low(self) -> float:
        return self.ci95[0]

    @property
    def ci95_high(self) -> float:
        return self.ci95[1]

    def __str__(self) -> str:
        lo, hi = self.ci95
        return (f"rate {self.rate:.6g} [{lo:.6g}, {hi:.6g}] "
                f"({self.errors}/{self.trials} errors, {self.ambiguous} undecided)")


def intervals_separated(lower: MisidEstimate, higher: MisidEstimate) -> bool:
    """True if lower's interval sits strictly below higher's."""
    return lower.ci95_high < higher.ci95_low
