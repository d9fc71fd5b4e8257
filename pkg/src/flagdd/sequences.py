"""Curtain, Peak and composite Flag preamble sequences.

All sequences are returned with unit energy.  A Curtain is a discrete chirp
whose ambiguity function lies on a single line through the origin; a Peak has
a thumbtack ambiguity function; the Flag is their normalized sum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class PeakKind(str, enum.Enum):
    WEIL_LEGENDRE = "weil_legendre"
    ZADOFF_CHU = "zadoff_chu"
    RANDOM_POLYPHASE = "random_polyphase"


@dataclass(frozen=True)
class CurtainParams:
    """Chirp parameters of a Curtain sequence.

    Parameters
    ----------
    length : int
        Sequence length ``N >= 2``.
    chirp_rate : int
        Slope of the curtain line in the delay-Doppler plane.
    phase_index : int
        Linear phase index, in ``[1 - N, N - 1]``.
    """

    length: int
    chirp_rate: int = 1
    phase_index: int = 1

    def __post_init__(self):
        n = self.length
        if n < 2:
            raise ValueError(f"curtain length must be >= 2, got {n}")
        if not 1 - n <= self.phase_index <= n - 1:
            raise ValueError(
                f"phase_index {self.phase_index} outside [{1 - n}, {n - 1}]"
            )
        if (self.chirp_rate * n - self.phase_index) % 2 != 0:
            raise ValueError(
                f"chirp_rate*N - phase_index = {self.chirp_rate * n - self.phase_index} "
                "is odd; the chirp is not N-periodic and the curtain smears off its line"
            )

    @classmethod
    def default(cls, length: int, chirp_rate: int = 1) -> "CurtainParams":
        """Slope ``chirp_rate`` with the smallest nonnegative valid phase index."""
        return cls(length, chirp_rate, (chirp_rate * length) % 2)


@dataclass(frozen=True)
class FlagPreamble:
    samples: np.ndarray = field(repr=False)
    curtain: CurtainParams
    peak_kind: PeakKind
    seed: int | None = None

    def __post_init__(self):
        if self.samples.shape != (self.curtain.length,):
            raise ValueError("samples length does not match curtain length")

    @property
    def length(self) -> int:
        return self.curtain.length

    @property
    def chirp_rate(self) -> int:
        return self.curtain.chirp_rate

    def params(self) -> dict:
        """Regeneration parameters (samples are never serialized)."""
        return {
            "length": self.curtain.length,
            "chirp_rate": self.curtain.chirp_rate,
            "phase_index": self.curtain.phase_index,
            "peak_kind": self.peak_kind.value,
            "seed": self.seed,
        }


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def legendre_symbol(a: np.ndarray, p: int) -> np.ndarray:
    """Legendre symbol ``(a/p)`` in {-1, 0, 1} for odd prime ``p``."""
    a = np.asarray(a, dtype=np.int64) % p
    out = np.array([pow(int(v), (p - 1) // 2, p) for v in a.ravel()], dtype=np.int64)
    out[out == p - 1] = -1
    return out.reshape(a.shape)


def make_curtain(params: CurtainParams) -> np.ndarray:
    """Unit-energy chirp ``exp(j*pi*n*(xi*n + q)/N) / sqrt(N)``."""
    n_len = params.length
    n = np.arange(n_len, dtype=np.int64)
    # integer phase numerator reduced mod 2N keeps large-N phases exact
    num = (n * (params.chirp_rate * n + params.phase_index)) % (2 * n_len)
    return np.exp(1j * np.pi * num / n_len) / np.sqrt(n_len)


def make_peak(
    length: int,
    kind: PeakKind | str = PeakKind.WEIL_LEGENDRE,
    seed: int | None = None,
    zc_root: int = 1,
) -> np.ndarray:
    """Unit-energy sequence with a thumbtack cyclic ambiguity function.

    ``WEIL_LEGENDRE`` needs a prime length and uses the Legendre character
    with ``p[0] = 1``.  ``ZADOFF_CHU`` uses root ``zc_root`` (coprime with the
    length).  ``RANDOM_POLYPHASE`` draws i.i.d. uniform phases from ``seed``.
    """
    kind = PeakKind(kind)
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    if length == 1:
        return np.ones(1, dtype=complex)

    if kind is PeakKind.WEIL_LEGENDRE:
        if not is_prime(length) or length == 2:
            raise ValueError(
                f"WEIL_LEGENDRE needs an odd prime length, got {length}; "
                "use ZADOFF_CHU or RANDOM_POLYPHASE for composite lengths"
            )
        chars = legendre_symbol(np.arange(length), length).astype(complex)
        chars[0] = 1.0
        seq = chars
    elif kind is PeakKind.ZADOFF_CHU:
        if math.gcd(zc_root, length) != 1:
            raise ValueError(f"root {zc_root} is not coprime with {length}")
        n = np.arange(length, dtype=np.int64)
        num = (zc_root * n * (n + length % 2)) % (2 * length)
        seq = np.exp(-1j * np.pi * num / length)
    else:
        rng = np.random.default_rng(seed)
        seq = np.exp(2j * np.pi * rng.random(length))

    return seq / np.linalg.norm(seq)


def make_flag(
    curtain: CurtainParams,
    peak_kind: PeakKind | str = PeakKind.WEIL_LEGENDRE,
    seed: int | None = None,
) -> FlagPreamble:
    """Flag preamble ``(c + p)/sqrt(2)`` renormalized to exactly unit energy."""
    peak_kind = PeakKind(peak_kind)
    c = make_curtain(curtain)
    p = make_peak(curtain.length, peak_kind, seed)
    f = (c + p) / np.sqrt(2.0)
    f = f / np.linalg.norm(f)
    f.setflags(write=False)
    return FlagPreamble(f, curtain, peak_kind, seed)


def default_flag(length: int, peak_kind: PeakKind | str | None = None, seed: int = 0) -> FlagPreamble:
    """Slope-1 Flag; Weil-Legendre peak for odd primes, random polyphase otherwise."""
    if peak_kind is None:
        peak_kind = (
            PeakKind.WEIL_LEGENDRE
            if is_prime(length) and length > 2
            else PeakKind.RANDOM_POLYPHASE
        )
    return make_flag(CurtainParams.default(length), peak_kind, seed)
