"""Doubly dispersive on-grid channel: generation, time-domain application, AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Path:
    delay: int
    doppler: float
    gain: complex


@dataclass(frozen=True)
class ChannelRealization:
    """A set of paths.

    ``doppler_grid`` is the sequence length the Doppler taps are defined on:
    a tap ``nu`` rotates the phase by ``2*pi*nu/doppler_grid`` per sample.
    ``None`` means "the length of whatever frame the channel is applied to".
    """

    paths: tuple[Path, ...]
    doppler_grid: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a channel needs at least one path")
        if any(p.delay < 0 for p in self.paths):
            raise ValueError("path delays must be nonnegative")

    @property
    def max_delay(self) -> int:
        return max(p.delay for p in self.paths)

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [(p.delay, int(round(p.doppler))) for p in self.paths]

    def doppler_step(self, frame_len: int) -> np.ndarray:
        """Per-sample Doppler phase increment in cycles for each path."""
        grid = self.doppler_grid or frame_len
        return np.array([p.doppler for p in self.paths], dtype=float) / grid

    @classmethod
    def from_triples(cls, triples, doppler_grid: int | None = None) -> "ChannelRealization":
        return cls(tuple(Path(int(t), v, complex(h)) for t, v, h in triples), doppler_grid)


def exponential_profile(num_paths: int, decay_db: float = 3.0) -> tuple[float, ...]:
    """Average path powers falling by ``decay_db`` per tap, summing to 1."""
    p = 10.0 ** (-decay_db * np.arange(num_paths) / 10.0)
    return tuple(float(v) for v in p / p.sum())


@dataclass
class ScenarioConfig:
    num_paths: int = 4
    max_delay: int = 8
    max_doppler: int = 2
    power_profile: tuple[float, ...] | None = None
    rng_seed: int | None = None

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.power_profile is None:
            self.power_profile = exponential_profile(self.num_paths)
        self.power_profile = tuple(float(v) for v in self.power_profile)
        if len(self.power_profile) != self.num_paths:
            raise ValueError(
                f"power_profile has {len(self.power_profile)} entries for {self.num_paths} paths"
            )
        if any(v <= 0 for v in self.power_profile):
            raise ValueError("power_profile entries must be positive")
        if self.max_delay < self.num_paths - 1:
            raise ValueError(
                f"cannot place {self.num_paths} distinct delay taps in [0, {self.max_delay}]"
            )
        if self.max_delay < 0 or self.max_doppler < 0:
            raise ValueError("max_delay and max_doppler must be nonnegative")


def draw_channel(
    scn: ScenarioConfig,
    rng: np.random.Generator | None = None,
    doppler_grid: int | None = None,
) -> ChannelRealization:
    """Random on-grid channel.

    Path 0 sits at delay 0; the others take distinct delays from
    ``[1, max_delay]``.  Doppler taps are uniform integers in
    ``[-max_doppler, max_doppler]`` and gains are circular Gaussian with the
    profile's variances.
    """
    if rng is None:
        rng = np.random.default_rng(scn.rng_seed)
    p = scn.num_paths
    delays = np.concatenate(
        [[0], rng.choice(np.arange(1, scn.max_delay + 1), size=p - 1, replace=False)]
    ).astype(int)
    dopplers = rng.integers(-scn.max_doppler, scn.max_doppler + 1, size=p)
    std = np.sqrt(np.asarray(scn.power_profile) / 2.0)
    gains = std * (rng.standard_normal(p) + 1j * rng.standard_normal(p))
    return ChannelRealization(
        tuple(Path(int(t), int(v), complex(h)) for t, v, h in zip(delays, dopplers, gains)),
        doppler_grid,
    )


def cpp_phase(frame_len: int, delay: int, c1: float) -> np.ndarray:
    """Diagonal of the CPP phase-fix matrix for one path delay."""
    n = np.arange(frame_len)
    gamma = np.ones(frame_len, dtype=complex)
    wrap = n < delay
    gamma[wrap] = np.exp(-2j * np.pi * c1 * (frame_len**2 - 2 * frame_len * (delay - n[wrap])))
    return gamma


def time_domain_matrix(chan: ChannelRealization, frame_len: int, c1: float = 0.0) -> np.ndarray:
    """``sum_i h_i Gamma_i Delta_i Pi^tau_i`` acting on a CPP-stripped body."""
    n = np.arange(frame_len)
    steps = chan.doppler_step(frame_len)
    h = np.zeros((frame_len, frame_len), dtype=complex)
    for path, step in zip(chan.paths, steps):
        if path.delay >= frame_len:
            raise ValueError(f"delay {path.delay} does not fit a length-{frame_len} frame")
        diag = path.gain * cpp_phase(frame_len, path.delay, c1) * np.exp(-2j * np.pi * step * n)
        h[n, (n - path.delay) % frame_len] += diag
    return h


def apply_channel(s: np.ndarray, chan: ChannelRealization, cpp_len: int) -> np.ndarray:
    """Linear time-varying convolution of a prefixed burst.

    Sample index ``m`` is counted from the first body sample (the prefix
    occupies ``m = -cpp_len..-1``), so the Doppler phase ``exp(-2j*pi*nu*m/N)``
    is referenced to the body start.  Samples before the burst are zero.
    """
    s = np.asarray(s, dtype=complex)
    frame_len = s.size - cpp_len
    if frame_len < 1:
        raise ValueError("burst shorter than its prefix")
    if chan.max_delay > cpp_len:
        raise ValueError(f"path delay {chan.max_delay} exceeds prefix length {cpp_len}")
    m = np.arange(-cpp_len, frame_len)
    out = np.zeros_like(s)
    for path, step in zip(chan.paths, chan.doppler_step(frame_len)):
        delayed = np.zeros_like(s)
        delayed[path.delay:] = s[: s.size - path.delay]
        out += path.gain * np.exp(-2j * np.pi * step * m) * delayed
    return out


def noise_variance(snr_db: float, signal_power_ref: float = 1.0) -> float:
    if np.isposinf(snr_db):
        return 0.0
    return signal_power_ref / 10.0 ** (snr_db / 10.0)


def complex_normal(size, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def add_awgn(r: np.ndarray, snr_db: float, signal_power_ref: float = 1.0,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Add ``CN(0, N0)`` noise with ``N0 = signal_power_ref / 10**(snr_db/10)``."""
    r = np.asarray(r, dtype=complex)
    n0 = noise_variance(snr_db, signal_power_ref)
    if n0 == 0.0:
        return r.copy()
    if rng is None:
        rng = np.random.default_rng()
    return r + np.sqrt(n0) * complex_normal(r.shape, rng)
