"""Flag-preamble delay-Doppler path estimators.

Two estimators share the same building blocks:

* ``estimate_traditional`` -- per path, one zero-delay line search picks a
  single curtain intercept, one line correlation finds the peak on it, and the
  path is cancelled from the residual (SIC).
* ``estimate_proposed`` -- per path, the top-``K`` intercepts above a relative
  threshold are all verified by line correlation and the strongest cell over
  all of them wins; the gains of every path found so far are then re-fitted
  jointly by least squares on the original received preamble, and the final
  fit is the reported one.

Both accept an optional search window (``max_delay``, ``max_doppler``) that
confines line search and peak search to physically admissible cells.

Internally cells are ``(tau, omega)`` in ambiguity-function coordinates
(see ``flagdd.ambiguity``).  A channel Doppler tap ``nu`` multiplies by
``exp(-2j*pi*nu*n/N)``, so it appears at ``omega = -nu mod N``; reported
``PathEstimate.doppler`` values use the channel convention, wrapped to a
signed range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from flagdd.afdm import AfdmConfig, effective_channel
from flagdd.ambiguity import dechirp_vector
from flagdd.channel import ChannelRealization, Path
from flagdd.sequences import FlagPreamble

COND_LIMIT = 1e8


@dataclass(frozen=True)
class EstimatorConfig:
    preamble: FlagPreamble
    num_paths: int = 4
    num_candidates: int = 3
    threshold: float = 0.25
    max_delay: int | None = None
    max_doppler: int | None = None

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.num_candidates < 1:
            raise ValueError("num_candidates must be >= 1")
        if self.num_candidates > self.preamble.length:
            raise ValueError("num_candidates cannot exceed the preamble length")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_delay is not None and not 0 <= self.max_delay < self.preamble.length:
            raise ValueError(f"max_delay must lie in [0, N), got {self.max_delay}")
        if self.max_doppler is not None and self.max_doppler < 0:
            raise ValueError(f"max_doppler must be nonnegative, got {self.max_doppler}")

    def window(self) -> np.ndarray:
        """Boolean ``[tau, omega]`` mask of the cells the search may return.

        Limits left at ``None`` leave that axis unrestricted.
        """
        n = self.preamble.length
        taus = np.ones(n, dtype=bool)
        if self.max_delay is not None:
            taus[self.max_delay + 1:] = False
        omegas = np.ones(n, dtype=bool)
        if self.max_doppler is not None:
            dop = np.array([omega_to_doppler(w, n) for w in range(n)])
            omegas = np.abs(dop) <= self.max_doppler
        return taus[:, None] & omegas[None, :]


@dataclass(frozen=True)
class PathEstimate:
    delay: int
    doppler: int
    gain: complex
    peak_magnitude: float
    candidate_rank: int = 0

    @property
    def cell(self) -> tuple[int, int]:
        return (self.delay, self.doppler)


@dataclass
class OpCounters:
    fft_calls: int = 0
    complex_muls: int = 0

    def fft(self, n: int, count: int = 1) -> None:
        self.fft_calls += count
        self.complex_muls += count * (n // 2) * max(1, math.ceil(math.log2(n)))

    def mul(self, n: int) -> None:
        self.complex_muls += n


@dataclass
class EstimationResult:
    paths: list[PathEstimate]
    counters: OpCounters
    candidates: list[np.ndarray] = field(default_factory=list)
    provisional_gains: np.ndarray | None = None

    def __iter__(self):
        return iter(self.paths)

    def __len__(self):
        return len(self.paths)

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [p.cell for p in self.paths]

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths])


def signed_tap(v: int, n: int) -> int:
    """Wrap a tap index into ``[-n//2, n - n//2)``."""
    return int((v + n // 2) % n - n // 2)


def doppler_to_omega(doppler: int, n: int) -> int:
    return int(-doppler % n)


def omega_to_doppler(omega: int, n: int) -> int:
    return signed_tap(-omega, n)


def shifted_preamble(f: np.ndarray, delay: int, doppler: float, doppler_grid: int | None = None) -> np.ndarray:
    """Preamble as seen through a single unit-gain path: ``f[n - delay] * exp(-2j*pi*nu*n/N)``."""
    n_len = f.size
    grid = doppler_grid or n_len
    n = np.arange(n_len)
    return np.roll(f, delay) * np.exp(-2j * np.pi * doppler * n / grid)


def basis_matrix(f: np.ndarray, cells) -> np.ndarray:
    """Columns are the preamble shifted to each ``(delay, doppler)`` cell."""
    cells = list(cells)
    phi = np.empty((f.size, len(cells)), dtype=complex)
    for i, (delay, doppler) in enumerate(cells):
        phi[:, i] = shifted_preamble(f, delay, doppler)
    return phi


def line_search(r: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``|FFT(r * conj(f))|``: curtain intercepts appear as peaks."""
    return np.abs(np.fft.fft(r * np.conj(f)))


def select_candidates(a: np.ndarray, num_candidates: int, threshold: float) -> np.ndarray:
    """Indices of the ``num_candidates`` largest entries not below ``threshold * max(a)``.

    The maximum always qualifies, so at least one index is returned.  Equal
    values are ranked by smaller index.
    """
    order = np.argsort(-a, kind="stable")[:num_candidates]
    return order[a[order] >= threshold * a[order[0]]]


def admissible_intercepts(window: np.ndarray, chirp_rate: int) -> np.ndarray:
    """Boolean mask of intercepts whose curtain line crosses at least one window cell."""
    n = window.shape[0]
    taus, omegas = np.nonzero(window)
    ok = np.zeros(n, dtype=bool)
    ok[(omegas - chirp_rate * taus) % n] = True
    return ok


def least_squares_gains(phi: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``(Phi^H Phi)^-1 Phi^H r`` with ridge loading when the Gram matrix is near singular."""
    gram = phi.conj().T @ phi
    rhs = phi.conj().T @ r
    if np.linalg.cond(gram) > COND_LIMIT:
        lam = 1e-6 * np.real(np.trace(gram)) / gram.shape[0]
        gram = gram + lam * np.eye(gram.shape[0])
    return np.linalg.solve(gram, rhs)


class _Searcher:
    """Per-invocation state shared by both estimators."""

    def __init__(self, r, preamble: FlagPreamble, window: np.ndarray | None = None):
        self.f = preamble.samples
        self.n = self.f.size
        r = np.asarray(r, dtype=complex)
        if r.shape != (self.n,):
            raise ValueError(f"received preamble has shape {r.shape}, expected ({self.n},)")
        self.r = r
        self.xi = preamble.chirp_rate
        self.counters = OpCounters()
        self.d = dechirp_vector(self.n, self.xi, preamble.curtain.phase_index)
        self.ref_spectrum = np.conj(np.fft.fft(self.f * self.d))
        self.counters.mul(self.n)
        self.counters.fft(self.n)
        self.window = window
        self.intercept_ok = None if window is None else admissible_intercepts(window, self.xi)

    def line_search(self, residual):
        self.counters.mul(self.n)
        self.counters.fft(self.n)
        a = line_search(residual, self.f)
        if self.intercept_ok is not None:
            a = np.where(self.intercept_ok, a, 0.0)
        return a

    def peak_search(self, residual, intercepts) -> np.ndarray:
        """``|z_k|`` rows for each intercept; one FFT plus one IFFT per intercept."""
        n = self.n
        spec = np.fft.fft(residual * self.d)
        self.counters.mul(n)
        self.counters.fft(n)
        z = np.empty((len(intercepts), n))
        for i, k in enumerate(intercepts):
            z[i] = np.abs(np.fft.ifft(np.roll(spec, -int(k)) * self.ref_spectrum))
            self.counters.mul(n)
            self.counters.fft(n)
        return z

    def cancel(self, residual, tau, omega):
        phi = shifted_preamble(self.f, tau, -omega)
        gain = np.vdot(phi, residual) / np.vdot(phi, phi).real
        self.counters.mul(2 * self.n)
        return gain, residual - gain * phi


def _best_cell(z: np.ndarray, intercepts, xi: int, n: int, masked: set,
               window: np.ndarray | None = None) -> tuple[int, int, int, float]:
    """Largest ``|z|`` over candidate lines; ties go to smaller delay, then smaller Doppler index.

    Cells in ``masked`` are never returned.  Cells outside ``window`` are
    skipped unless no candidate line has any admissible cell left.
    """
    taus = np.arange(n)
    for use_window in ((True, False) if window is not None else (False,)):
        best = None
        for rank, k in enumerate(intercepts):
            omegas = (int(k) + xi * taus) % n
            mags = z[rank].copy()
            if use_window:
                mags[~window[taus, omegas]] = -np.inf
            for tau, omega in masked:
                if omegas[tau] == omega:
                    mags[tau] = -np.inf
            top = mags.max()
            if top == -np.inf:
                continue
            for tau in np.flatnonzero(mags == top):
                key = (-top, int(tau), int(omegas[tau]))
                if best is None or key < best[0]:
                    best = (key, rank)
        if best is not None:
            break
    (neg_mag, tau, omega), rank = best
    return tau, omega, rank, float(-neg_mag)


def _window(cfg: EstimatorConfig) -> np.ndarray | None:
    if cfg.max_delay is None and cfg.max_doppler is None:
        return None
    return cfg.window()


def estimate_traditional(r, cfg: EstimatorConfig) -> EstimationResult:
    """Two-step Flag search with SIC and no candidate set or joint refit."""
    window = _window(cfg)
    s = _Searcher(r, cfg.preamble, window)
    n = s.n
    residual = s.r.copy()
    paths, cands = [], []
    for _ in range(cfg.num_paths):
        a = s.line_search(residual)
        k = int(np.argmax(a))
        cands.append(np.array([k]))
        z = s.peak_search(residual, [k])
        tau, omega, _, mag = _best_cell(z, [k], s.xi, n, set(), window)
        gain, residual = s.cancel(residual, tau, omega)
        paths.append(PathEstimate(tau, omega_to_doppler(omega, n), complex(gain), mag, 0))
    return EstimationResult(paths, s.counters, cands, np.array([p.gain for p in paths]))


def estimate_proposed(r, cfg: EstimatorConfig) -> EstimationResult:
    """Candidate-aided line search with SIC, then global least-squares gain refit.

    Per path, the candidate intercepts are the top ``K`` line-search peaks not
    below ``threshold * max``.  Paths already detected at delay 0 sit on the
    line-search slice itself, and cancelling them forces the slice to zero at
    their intercepts, hiding any weaker path on the same curtain line; those
    intercepts are re-checked first, using at most ``K - 1`` of the ``K``
    slots.  After each detection the gains of all paths found so far are
    re-fitted on the original ``r`` and the residual is rebuilt from them, so
    a biased gain cannot leave a ghost curtain behind.
    """
    window = _window(cfg)
    s = _Searcher(r, cfg.preamble, window)
    n = s.n
    residual = s.r.copy()
    found: list[tuple[int, int, int, float]] = []
    detected: set[tuple[int, int]] = set()
    cands, provisional = [], []
    for _ in range(cfg.num_paths):
        a = s.line_search(residual)
        recheck = []
        for tau, omega, *_ in found:
            if tau == 0 and omega not in recheck:
                recheck.append(omega)
        recheck = recheck[: cfg.num_candidates - 1]
        ks = [k for k in select_candidates(a, cfg.num_candidates, cfg.threshold) if k not in recheck]
        ks = np.array(recheck + ks[: cfg.num_candidates - len(recheck)], dtype=np.int64)
        cands.append(ks)
        z = s.peak_search(residual, ks)
        tau, omega, rank, mag = _best_cell(z, ks, s.xi, n, detected, window)
        gain, _ = s.cancel(residual, tau, omega)
        provisional.append(gain)
        found.append((tau, omega, rank, mag))
        detected.add((tau, omega))
        cells = [(t, omega_to_doppler(o, n)) for t, o, *_ in found]
        phi = basis_matrix(s.f, cells)
        residual = s.r - phi @ least_squares_gains(phi, s.r)
        s.counters.mul(n * len(cells) ** 2 + 2 * n * len(cells))

    gains = least_squares_gains(phi, s.r)
    s.counters.mul(n * len(cells) ** 2 + n * len(cells))
    paths = [
        PathEstimate(t, dop, complex(g), m, rank)
        for (t, dop), (_, _, rank, m), g in zip(cells, found, gains)
    ]
    return EstimationResult(paths, s.counters, cands, np.array(provisional))


def reconstruct_channel(estimates, cpp_len: int, doppler_grid: int | None = None
                        ) -> tuple[ChannelRealization, int]:
    """Channel from estimated triples; delays beyond ``cpp_len`` are clamped.

    Returns the channel and the number of clamped delays.
    """
    paths, clamped = [], 0
    for est in estimates:
        delay = est.delay
        if delay > cpp_len:
            delay, clamped = cpp_len, clamped + 1
        paths.append(Path(int(delay), est.doppler, complex(est.gain)))
    return ChannelRealization(tuple(paths), doppler_grid), clamped


def reconstruct_channel_matrix(estimates, afdm_cfg: AfdmConfig, doppler_grid: int | None = None) -> np.ndarray:
    """DAFT-domain effective channel built from estimated paths."""
    chan, _ = reconstruct_channel(estimates, afdm_cfg.cpp_len, doppler_grid)
    return effective_channel(chan, afdm_cfg)
