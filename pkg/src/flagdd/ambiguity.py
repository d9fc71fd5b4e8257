"""Discrete cyclic cross-ambiguity functions.

Convention used throughout the package::

    AF(tau, omega) = | sum_n r[n] * conj(s[(n - tau) mod N]) * exp(-2j*pi*omega*n/N) |

so a copy of ``s`` delayed by ``tau0`` and modulated by ``exp(+2j*pi*omega0*n/N)``
peaks at ``(tau0, omega0)``.  Lines of slope ``xi`` are parameterized by their
Doppler intercept ``k`` as ``{(tau, (k + xi*tau) mod N)}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from os import PathLike

import numpy as np

MAX_GRID_LEN = 4096


def _check_pair(r, s):
    r = np.asarray(r, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if r.ndim != 1 or r.shape != s.shape:
        raise ValueError(f"length mismatch: {r.shape} vs {s.shape}")
    return r, s


def dechirp_vector(length: int, chirp_rate: int, phase_index: int | None = None) -> np.ndarray:
    """``exp(-j*pi*n*(xi*n + q)/N)``, N-periodic when ``xi*N - q`` is even.

    ``phase_index=None`` picks ``q = (xi*N) mod 2``, which equals the plain
    ``exp(-j*pi*xi*n**2/N)`` whenever ``xi*N`` is even.
    """
    if phase_index is None:
        phase_index = (chirp_rate * length) % 2
    n = np.arange(length, dtype=np.int64)
    num = (n * (chirp_rate * n + phase_index)) % (2 * length)
    return np.exp(-1j * np.pi * num / length)


def af_cell(r, s, tau: int, omega: int) -> float:
    r, s = _check_pair(r, s)
    n_len = r.size
    n = np.arange(n_len)
    shifted = np.roll(s, tau % n_len)
    phase = np.exp(-2j * np.pi * ((omega % n_len) * n % n_len) / n_len)
    return float(abs(np.sum(r * np.conj(shifted) * phase)))


def af_doppler_slice(r, s) -> np.ndarray:
    """AF on the zero-delay line, one FFT."""
    r, s = _check_pair(r, s)
    return np.abs(np.fft.fft(r * np.conj(s)))


def line_spectra(r, s, chirp_rate: int, intercepts, phase_index: int | None = None,
                 ref_spectrum: np.ndarray | None = None) -> np.ndarray:
    """Complex line correlations for several Doppler intercepts.

    Row ``i`` holds, at index ``tau``, the cross-correlation along the line
    with intercept ``intercepts[i]``; its magnitude is ``AF(tau, k + xi*tau)``.
    Uses one forward FFT of the de-chirped ``r`` and one IFFT per intercept;
    the intercept's Doppler compensation is a cyclic shift of that spectrum.
    ``ref_spectrum`` may carry a precomputed ``conj(FFT(s * d))``.
    """
    r, s = _check_pair(r, s)
    d = dechirp_vector(r.size, chirp_rate, phase_index)
    if ref_spectrum is None:
        ref_spectrum = np.conj(np.fft.fft(s * d))
    spec_r = np.fft.fft(r * d)
    ks = np.atleast_1d(np.asarray(intercepts, dtype=np.int64)) % r.size
    out = np.empty((ks.size, r.size), dtype=complex)
    for i, k in enumerate(ks):
        # FFT(r*d*exp(-2j*pi*k*n/N))[m] == FFT(r*d)[m + k]
        out[i] = np.fft.ifft(np.roll(spec_r, -int(k)) * ref_spectrum)
    return out


def af_line_slice(r, s, chirp_rate: int, intercept: int, phase_index: int | None = None) -> np.ndarray:
    """AF magnitudes along the slope-``chirp_rate`` line with Doppler intercept ``intercept``."""
    return np.abs(line_spectra(r, s, chirp_rate, [intercept], phase_index)[0])


@dataclass(frozen=True)
class AfGrid:
    """``values[tau, omega]`` of AF magnitudes on the full cyclic grid."""

    values: np.ndarray

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def argmax(self) -> tuple[int, int]:
        tau, omega = np.unravel_index(np.argmax(self.values), self.values.shape)
        return int(tau), int(omega)

    def line_mask(self, chirp_rate: int, intercept: int = 0) -> np.ndarray:
        n = self.length
        tau = np.arange(n)
        mask = np.zeros((n, n), dtype=bool)
        mask[tau, (intercept + chirp_rate * tau) % n] = True
        return mask

    def to_csv(self, path: str | PathLike) -> None:
        n = self.length
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "doppler", "magnitude"])
            for tau in range(n):
                for omega in range(n):
                    writer.writerow([tau, omega, f"{self.values[tau, omega]:.9g}"])


def full_grid(r, s, chunk: int = 256) -> AfGrid:
    """All ``N*N`` AF cells via one FFT per delay row."""
    r, s = _check_pair(r, s)
    n_len = r.size
    if n_len > MAX_GRID_LEN:
        raise ValueError(f"full grid limited to N <= {MAX_GRID_LEN}, got {n_len}")
    idx = np.arange(n_len)
    values = np.empty((n_len, n_len))
    for start in range(0, n_len, chunk):
        taus = np.arange(start, min(start + chunk, n_len))
        shifted = s[(idx[None, :] - taus[:, None]) % n_len]
        values[taus] = np.abs(np.fft.fft(r[None, :] * np.conj(shifted), axis=1))
    return AfGrid(values)


@dataclass(frozen=True)
class PeakCurtainStats:
    origin: float
    on_line: np.ndarray
    off_line_max: float
    line_energy_fraction: float


def peak_curtain_stats(grid: AfGrid, chirp_rate: int, origin: tuple[int, int] = (0, 0)) -> PeakCurtainStats:
    """Split a grid into the origin cell, the rest of its curtain line, and everything else."""
    tau0, omega0 = origin
    n = grid.length
    line = grid.line_mask(chirp_rate, (omega0 - chirp_rate * tau0) % n)
    vals = grid.values
    on_line = line.copy()
    on_line[tau0 % n, omega0 % n] = False
    energy = vals**2
    return PeakCurtainStats(
        origin=float(vals[tau0 % n, omega0 % n]),
        on_line=vals[on_line],
        off_line_max=float(vals[~line].max()) if (~line).any() else 0.0,
        line_energy_fraction=float(energy[line].sum() / energy.sum()),
    )
