"""Per-trial metrics and their aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrialRecord:
    """One Monte-Carlo trial at one grid point.

    ``detected + misses`` is the number of targets scored in the trial;
    ``false_alarms`` are counted out of ``alarm_slots`` declarations.
    Fields that do not apply to a study are NaN (``mse``) or zero.
    """

    param: str
    snr_db: float
    mse: float = float("nan")
    detected: int = 0
    misses: int = 0
    false_alarms: int = 0
    alarm_slots: int = 0
    bit_errors: int = 0
    bits_total: int = 0
    fft_calls: int = 0

    def __post_init__(self):
        counts = (self.detected, self.misses, self.false_alarms, self.alarm_slots,
                  self.bit_errors, self.bits_total, self.fft_calls)
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")


def channel_mse(h, h_hat) -> float:
    """``||H - H_hat||_F^2 / ||H||_F^2``."""
    h = np.asarray(h)
    h_hat = np.asarray(h_hat)
    if h.shape != h_hat.shape:
        raise ValueError(f"shape mismatch {h.shape} vs {h_hat.shape}")
    ref = np.linalg.norm(h) ** 2
    if ref == 0.0:
        raise ValueError("true channel has zero norm")
    return float(np.linalg.norm(h - h_hat) ** 2 / ref)


def match_paths(truth_cells, est_cells, tolerance: int = 0) -> tuple[int, int, int]:
    """Greedy one-to-one matching of estimated cells to true cells.

    A match needs ``|delay error| <= tolerance`` and ``|Doppler error| <=
    tolerance`` (exact cells by default).  Returns ``(detected, misses,
    false_alarms)``.
    """
    truth = list(truth_cells)
    used = [False] * len(truth)
    detected = 0
    # exact hits first so a tolerance window never steals a perfect match
    pending = []
    for cell in est_cells:
        for i, t in enumerate(truth):
            if not used[i] and tuple(t) == tuple(cell):
                used[i] = True
                detected += 1
                break
        else:
            pending.append(cell)
    false_alarms = 0
    for cell in pending:
        for i, t in enumerate(truth):
            if (not used[i] and abs(t[0] - cell[0]) <= tolerance
                    and abs(t[1] - cell[1]) <= tolerance):
                used[i] = True
                detected += 1
                break
        else:
            false_alarms += 1
    return detected, len(truth) - detected, false_alarms


def ber(tx_bits, rx_bits) -> float:
    tx_bits = np.asarray(tx_bits)
    rx_bits = np.asarray(rx_bits)
    if tx_bits.shape != rx_bits.shape:
        raise ValueError(f"length mismatch {tx_bits.shape} vs {rx_bits.shape}")
    if tx_bits.size == 0:
        raise ValueError("empty bit vectors")
    return float(np.count_nonzero(tx_bits != rx_bits) / tx_bits.size)


def _ratio(num, den):
    return num / den if den else float("nan")


def aggregate(records) -> dict:
    """Fold trial records of one grid point into summary statistics."""
    records = list(records)
    if not records:
        raise ValueError("nothing to aggregate")
    mse = np.array([r.mse for r in records], dtype=float)
    mse = mse[~np.isnan(mse)]
    detected = sum(r.detected for r in records)
    misses = sum(r.misses for r in records)
    targets = detected + misses
    return {
        "trials": len(records),
        "mse_mean": float(mse.mean()) if mse.size else float("nan"),
        "mse_sem": float(mse.std(ddof=1) / np.sqrt(mse.size)) if mse.size > 1 else float("nan"),
        "pd": _ratio(detected, targets),
        "pm": _ratio(misses, targets),
        "pfa": _ratio(sum(r.false_alarms for r in records), sum(r.alarm_slots for r in records)),
        "ber": _ratio(sum(r.bit_errors for r in records), sum(r.bits_total for r in records)),
        "fft_calls_mean": float(np.mean([r.fft_calls for r in records])),
    }
