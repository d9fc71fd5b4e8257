"""AFDM modem: IDAFT/DAFT, chirp-periodic prefix and the effective channel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from flagdd.channel import ChannelRealization, time_domain_matrix

MAX_DENSE_LEN = 4096


@dataclass(frozen=True)
class AfdmConfig:
    n: int
    c1: float
    c2: float = 0.0
    cpp_len: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"AFDM needs N >= 2, got {self.n}")
        if self.cpp_len < 0:
            raise ValueError("cpp_len must be nonnegative")

    @classmethod
    def for_channel(cls, n: int, max_doppler: int, max_delay: int, c2: float = 0.0) -> "AfdmConfig":
        """``c1 = (2*nu_max + 1)/(2N)`` and the shortest admissible prefix."""
        return cls(n, (2 * max_doppler + 1) / (2 * n), c2, max_delay)


def _chirp(n: int, c: float) -> np.ndarray:
    """Diagonal of ``Lambda_c = diag(exp(-2j*pi*c*n**2))``."""
    k = np.arange(n, dtype=float)
    return np.exp(-2j * np.pi * c * k**2)


@dataclass(frozen=True)
class DaftMatrices:
    a: np.ndarray
    a_inv: np.ndarray


@lru_cache(maxsize=16)
def daft_matrices(cfg: AfdmConfig) -> DaftMatrices:
    """Dense ``A = Lambda_c2 F Lambda_c1`` (unitary ``F``) and ``A^H``."""
    if cfg.n > MAX_DENSE_LEN:
        raise ValueError(f"dense DAFT limited to N <= {MAX_DENSE_LEN}")
    f = np.fft.fft(np.eye(cfg.n), axis=0, norm="ortho")
    a = _chirp(cfg.n, cfg.c2)[:, None] * f * _chirp(cfg.n, cfg.c1)[None, :]
    a.setflags(write=False)
    a_inv = a.conj().T.copy()
    a_inv.setflags(write=False)
    return DaftMatrices(a, a_inv)


def add_cpp(body: np.ndarray, cpp_len: int, c1: float = 0.0) -> np.ndarray:
    """Prepend ``s[n] = s[N+n]*exp(-2j*pi*c1*(N**2 + 2*N*n))`` for ``n = -cpp_len..-1``.

    With ``c1 = 0`` this is a plain cyclic prefix.
    """
    body = np.asarray(body, dtype=complex)
    n_len = body.size
    if cpp_len > n_len:
        raise ValueError(f"prefix {cpp_len} longer than body {n_len}")
    if cpp_len == 0:
        return body.copy()
    n = np.arange(-cpp_len, 0)
    prefix = body[n_len + n] * np.exp(-2j * np.pi * c1 * (n_len**2 + 2 * n_len * n))
    return np.concatenate([prefix, body])


def strip_cpp(r: np.ndarray, cpp_len: int) -> np.ndarray:
    return np.asarray(r)[cpp_len:]


def idaft(x: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (cfg.n,):
        raise ValueError(f"expected {cfg.n} symbols, got {x.shape}")
    return np.conj(_chirp(cfg.n, cfg.c1)) * np.fft.ifft(np.conj(_chirp(cfg.n, cfg.c2)) * x, norm="ortho")


def modulate(x: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    """IDAFT of ``N`` symbols followed by the chirp-periodic prefix."""
    return add_cpp(idaft(x, cfg), cfg.cpp_len, cfg.c1)


def demodulate(r: np.ndarray, cfg: AfdmConfig) -> np.ndarray:
    """DAFT ``y = Lambda_c2 F Lambda_c1 r`` of a prefix-stripped body."""
    r = np.asarray(r, dtype=complex)
    if r.shape[0] != cfg.n:
        raise ValueError(f"expected {cfg.n} samples, got {r.shape[0]}")
    return _chirp(cfg.n, cfg.c2) * np.fft.fft(_chirp(cfg.n, cfg.c1) * r, norm="ortho")


def effective_channel(chan: ChannelRealization, cfg: AfdmConfig) -> np.ndarray:
    """Dense DAFT-domain channel ``A H A^H``."""
    if cfg.n > MAX_DENSE_LEN:
        raise ValueError(f"dense effective channel limited to N <= {MAX_DENSE_LEN}")
    if chan.max_delay > cfg.cpp_len:
        raise ValueError(f"path delay {chan.max_delay} exceeds prefix length {cfg.cpp_len}")
    h = time_domain_matrix(chan, cfg.n, cfg.c1)
    mats = daft_matrices(cfg)
    return mats.a @ h @ mats.a_inv


def full_diversity_c1(n: int, max_doppler: int) -> float:
    return (2 * max_doppler + 1) / (2 * n)


def rescaled_max_doppler(max_doppler: int, from_len: int, to_len: int) -> int:
    """Largest integer Doppler bound on a ``to_len`` grid covering ``max_doppler`` taps of a ``from_len`` grid."""
    return math.ceil(max_doppler * to_len / from_len)
