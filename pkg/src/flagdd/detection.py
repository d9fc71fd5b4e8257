"""Gray-mapped 4-QAM and LMMSE equalization in the DAFT domain."""

from __future__ import annotations

import numpy as np

_SCALE = 1.0 / np.sqrt(2.0)

#: bit pair (b0, b1) -> symbol; b0 drives the real part, b1 the imaginary part
GRAY_4QAM = {
    (0, 0): complex(_SCALE, _SCALE),
    (0, 1): complex(_SCALE, -_SCALE),
    (1, 0): complex(-_SCALE, _SCALE),
    (1, 1): complex(-_SCALE, -_SCALE),
}


def qam_map(bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 2:
        raise ValueError(f"need an even number of bits, got shape {bits.shape}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b = bits.reshape(-1, 2).astype(float)
    return _SCALE * ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1]))


def qam_demap(symbols) -> np.ndarray:
    """Nearest-point hard decisions."""
    symbols = np.asarray(symbols)
    if symbols.ndim != 1:
        raise ValueError("symbols must be a vector")
    bits = np.empty((symbols.size, 2), dtype=np.int8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.ravel()


def lmmse_equalize(y, h_eff, noise_var: float) -> np.ndarray:
    """``(H^H H + noise_var I)^-1 H^H y``; pseudo-inverse when that system is singular."""
    y = np.asarray(y, dtype=complex)
    h_eff = np.asarray(h_eff, dtype=complex)
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    if h_eff.ndim != 2 or h_eff.shape[0] != y.shape[0]:
        raise ValueError(f"channel {h_eff.shape} does not match observation {y.shape}")
    hh = h_eff.conj().T
    gram = hh @ h_eff + noise_var * np.eye(h_eff.shape[1])
    rhs = hh @ y
    try:
        if noise_var == 0.0 and np.linalg.cond(gram) > 1e12:
            raise np.linalg.LinAlgError("rank deficient")
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(h_eff) @ y
