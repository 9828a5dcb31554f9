"""Pseudo-noise sequence machinery: m-sequences, Gold code families, correlation.

Bipolar convention used throughout the package: bit 0 -> +1, bit 1 -> -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Complete sets of primitive polynomials per degree, found by exhaustive
# period search (Fibonacci LFSR below reaches period 2^m - 1 iff the
# polynomial is primitive). Masks carry bit i = coefficient of x^i,
# e.g. x^5 + x^2 + 1 -> 0x25.
PRIMITIVE_POLYS: dict[int, frozenset[int]] = {
    3: frozenset([0xB, 0xD]),
    4: frozenset([0x13, 0x19]),
    5: frozenset([0x25, 0x29, 0x2F, 0x37, 0x3B, 0x3D]),
    6: frozenset([0x43, 0x5B, 0x61, 0x67, 0x6D, 0x73]),
    7: frozenset([0x83, 0x89, 0x8F, 0x91, 0x9D, 0xA7, 0xAB, 0xB9, 0xBF, 0xC1,
                  0xCB, 0xD3, 0xD5, 0xE5, 0xEF, 0xF1, 0xF7, 0xFD]),
    8: frozenset([0x11D, 0x12B, 0x12D, 0x14D, 0x15F, 0x163, 0x165, 0x169,
                  0x171, 0x187, 0x18D, 0x1A9, 0x1C3, 0x1CF, 0x1E7, 0x1F5]),
    9: frozenset([0x211, 0x21B, 0x221, 0x22D, 0x233, 0x259, 0x25F, 0x269,
                  0x26F, 0x277, 0x27D, 0x287, 0x295, 0x2A3, 0x2A5, 0x2AF,
                  0x2B7, 0x2BD, 0x2CF, 0x2D1, 0x2DB, 0x2F5, 0x2F9, 0x313,
                  0x315, 0x31F, 0x323, 0x331, 0x33B, 0x34F, 0x35B, 0x361,
                  0x36B, 0x36D, 0x373, 0x37F, 0x385, 0x38F, 0x3B5, 0x3B9,
                  0x3C7, 0x3CB, 0x3CD, 0x3D5, 0x3D9, 0x3E3, 0x3E9, 0x3FB]),
    10: frozenset([0x409, 0x41B, 0x427, 0x42D, 0x465, 0x46F, 0x481, 0x48B,
                   0x4C5, 0x4D7, 0x4E7, 0x4F3, 0x4FF, 0x50D, 0x519, 0x523,
                   0x531, 0x53D, 0x543, 0x557, 0x56B, 0x585, 0x58F, 0x597,
                   0x5A1, 0x5C7, 0x5E5, 0x5F7, 0x5FB, 0x613, 0x615, 0x625,
                   0x637, 0x643, 0x64F, 0x65B, 0x679, 0x67F, 0x689, 0x6B5,
                   0x6C1, 0x6D3, 0x6DF, 0x6FD, 0x717, 0x71D, 0x721, 0x739,
                   0x747, 0x74D, 0x755, 0x759, 0x763, 0x77D, 0x78D, 0x793,
                   0x7B1, 0x7DB, 0x7F3, 0x7F9]),
}

# One verified preferred pair per supported degree. Degrees divisible by 4
# have no preferred pairs and are rejected. Each pair is validated by the
# exhaustive three-valued cross-correlation check in the test suite.
PREFERRED_PAIRS: dict[int, tuple[int, int]] = {
    3: (0xB, 0xD),
    5: (0x25, 0x2F),
    6: (0x43, 0x5B),
    7: (0x83, 0x89),
    9: (0x211, 0x21B),
    10: (0x409, 0x46F),
}


class SequenceError(ValueError):
    """Invalid sequence parameters (unsupported degree, zero seed, ...)."""


def three_valued_set(m: int) -> frozenset[int]:
    """The admissible periodic cross-correlation values {-1, -t, t-2}."""
    t = (1 << ((m + 2) // 2)) + 1
    return frozenset((-1, -t, t - 2))


def lfsr_msequence(poly: int, seed: int = 1, *, m: int | None = None) -> np.ndarray:
    """Generate one period of the m-sequence of a primitive polynomial.

    Fibonacci register: state bits are (a_n, ..., a_{n+m-1}) with a_n in the
    LSB; each step outputs a_n and feeds back sum(p_i * a_{n+i}) mod 2.
    Returns bits as an int8 array of length 2^m - 1.
    """
    if m is None:
        m = poly.bit_length() - 1
    if m not in PRIMITIVE_POLYS:
        raise SequenceError(
            f"degree {m} not supported; table covers {sorted(PRIMITIVE_POLYS)}")
    if poly not in PRIMITIVE_POLYS[m]:
        raise SequenceError(f"polynomial 0x{poly:X} is not in the degree-{m} table")
    if not 0 < seed < (1 << m):
        raise SequenceError(f"seed must be a nonzero {m}-bit state, got {seed}")

    length = (1 << m) - 1
    taps = poly & (length)  # p_0 .. p_{m-1}
    state = seed
    out = np.empty(length, dtype=np.int8)
    for i in range(length):
        out[i] = state & 1
        fb = bin(state & taps).count("1") & 1
        state = (state >> 1) | (fb << (m - 1))
    return out


def bipolar(bits: np.ndarray) -> np.ndarray:
    """Map bits to chips: 0 -> +1.0, 1 -> -1.0."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


@dataclass(frozen=True)
class GoldFamily:
    """A full family of 2^m + 1 bipolar Gold codes of length 2^m - 1."""

    m: int
    poly_pair: tuple[int, int]
    codes: np.ndarray = field(repr=False)  # shape (2^m + 1, 2^m - 1), +-1

    @property
    def length(self) -> int:
        return (1 << self.m) - 1

    @property
    def size(self) -> int:
        return self.codes.shape[0]

    def code(self, index: int) -> np.ndarray:
        if not 0 <= index < self.size:
            raise SequenceError(f"code index {index} outside family of {self.size}")
        return self.codes[index]


def gold_family(m: int) -> GoldFamily:
    """Build the Gold family for degree m.

    Family = the two preferred m-sequences plus u XOR roll(v, -k) for every
    cyclic shift k, giving 2^m + 1 codes. Degrees divisible by 4 have no
    preferred pair and are rejected.
    """
    if m % 4 == 0:
        raise SequenceError(f"no preferred pairs exist for m = {m} (divisible by 4)")
    if m not in PREFERRED_PAIRS:
        raise SequenceError(
            f"degree {m} not supported; preferred pairs known for {sorted(PREFERRED_PAIRS)}")
    p1, p2 = PREFERRED_PAIRS[m]
    u = lfsr_msequence(p1, m=m)
    v = lfsr_msequence(p2, m=m)
    length = (1 << m) - 1
    rows = [u, v]
    for k in range(length):
        rows.append(np.bitwise_xor(u, np.roll(v, -k)))
    return GoldFamily(m=m, poly_pair=(p1, p2), codes=bipolar(np.stack(rows)))


def periodic_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All cyclic cross-correlations sum_i a[i] * b[i+shift], via FFT."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise SequenceError("periodic correlation needs equal-length sequences")
    return np.fft.ifft(np.conj(np.fft.fft(a)) * np.fft.fft(b)).real


def correlate(received: np.ndarray, code: np.ndarray) -> complex:
    """Inner product of the first len(code) received samples with conj(code).

    Linear in the received signal; raises if fewer samples than chips.
    """
    received = np.asarray(received)
    code = np.asarray(code)
    if received.shape[0] < code.shape[0]:
        raise SequenceError(
            f"received length {received.shape[0]} shorter than code length {code.shape[0]}")
    return complex(np.vdot(code.astype(np.complex128), received[: code.shape[0]]))


def correlation_histogram(family: GoldFamily) -> dict[int, int]:
    """Histogram of every periodic (cross- and auto-)correlation value.

    Covers all ordered pairs (i, j) and all shifts; the only value outside
    the three-valued set should be the autocorrelation peak at shift 0.
    Used by the `verify-sequences` self-test.
    """
    codes = family.codes
    spectra = np.fft.fft(codes, axis=1)
    hist: dict[int, int] = {}
    n = family.size
    for i in range(n):
        cross = np.fft.ifft(np.conj(spectra[i])[None, :] * spectra[i:], axis=1).real
        vals, counts = np.unique(np.round(cross).astype(np.int64), return_counts=True)
        # each unordered pair counted once; (j, i) mirrors the same values
        for v, c in zip(vals.tolist(), counts.tolist()):
            hist[v] = hist.get(v, 0) + c
    return hist
