"""Monte-Carlo studies: parameter sweeps, channel MSE, PD/PM and BER.

Every trial draws one channel and one set of unit-variance noise/bit streams
from ``SeedSequence([base_seed, trial])``; the same draws are reused at every
SNR point and for every algorithm, so curves are compared on common random
numbers and results do not depend on how trials are spread over workers.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path as FsPath

import numpy as np
import yaml

from flagdd.afdm import (
    AfdmConfig,
    add_cpp,
    demodulate,
    effective_channel,
    full_diversity_c1,
    modulate,
    rescaled_max_doppler,
    strip_cpp,
)
from flagdd.ambiguity import full_grid
from flagdd.channel import (
    ChannelRealization,
    ScenarioConfig,
    apply_channel,
    complex_normal,
    draw_channel,
    noise_variance,
    time_domain_matrix,
)
from flagdd.detection import lmmse_equalize, qam_demap, qam_map
from flagdd.estimation import (
    EstimatorConfig,
    admissible_intercepts,
    doppler_to_omega,
    estimate_proposed,
    estimate_traditional,
    line_search,
    reconstruct_channel,
    select_candidates,
)
from flagdd.metrics import TrialRecord, aggregate, channel_mse, match_paths
from flagdd.sequences import CurtainParams, FlagPreamble, PeakKind, is_prime, make_flag

log = logging.getLogger(__name__)

CSV_HEADER = ["study", "param", "snr_db", "trials", "mse_mean", "mse_sem",
              "pd", "pm", "pfa", "ber", "fft_calls_mean"]


class Study(str, enum.Enum):
    SWEEP_K = "sweep_k"
    SWEEP_GAMMA = "sweep_gamma"
    MSE = "mse"
    PDPM = "pdpm"
    BER = "ber"
    AF_HEATMAP = "af_heatmap"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the field path."""


@dataclass
class AfdmSettings:
    n: int = 256
    c1: float | None = None
    c2: float = 0.0
    cpp_len: int | None = None


@dataclass
class EstimatorSettings:
    num_candidates: int = 3
    threshold: float = 0.25
    num_paths: int | None = None
    peak_kind: str | None = None
    chirp_rate: int = 1
    peak_seed: int = 0
    search_window: bool = True


@dataclass
class SweepSettings:
    k_values: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    gamma_values: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(1, 13))

    def __post_init__(self):
        self.k_values = tuple(int(k) for k in self.k_values)
        self.gamma_values = tuple(float(g) for g in self.gamma_values)
        if not self.k_values or min(self.k_values) < 1:
            raise ConfigError("sweep.k_values: need at least one value, all >= 1")
        if not self.gamma_values or not all(0 < g < 1 for g in self.gamma_values):
            raise ConfigError("sweep.gamma_values: need at least one value, all in (0, 1)")


@dataclass
class ExperimentConfig:
    study: Study = Study.MSE
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    trials: int = 100
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    afdm: AfdmSettings = field(default_factory=AfdmSettings)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    preamble_len: int = 127
    base_seed: int = 0
    output_path: str = "results"
    workers: int = 1
    match_tolerance: int = 0

    def __post_init__(self):
        self.study = Study(self.study)
        self.snr_grid_db = tuple(float(v) for v in self.snr_grid_db)
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db: must not be empty")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if self.preamble_len < 2:
            raise ConfigError("preamble_len: must be >= 2")
        kind = self.estimator.peak_kind
        if kind is not None:
            try:
                kind = PeakKind(kind)
            except ValueError:
                raise ConfigError(f"estimator.peak_kind: unknown kind {kind!r}") from None
            if kind is PeakKind.WEIL_LEGENDRE and not (is_prime(self.preamble_len) and self.preamble_len > 2):
                raise ConfigError(
                    f"estimator.peak_kind: weil_legendre needs an odd prime preamble_len, got {self.preamble_len}"
                )
        if self.scenario.max_delay >= self.preamble_len:
            raise ConfigError("scenario.max_delay: must be shorter than the preamble")
        cpp = self.afdm.cpp_len
        if cpp is not None and cpp < self.scenario.max_delay:
            raise ConfigError(f"afdm.cpp_len: {cpp} is below scenario.max_delay {self.scenario.max_delay}")
        if self.afdm.n <= self.scenario.max_delay:
            raise ConfigError("afdm.n: frame must be longer than the maximum delay")

    @property
    def num_paths(self) -> int:
        return self.estimator.num_paths or self.scenario.num_paths

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, enum.Enum):
                return v.value
            if isinstance(v, tuple):
                return [conv(x) for x in v]
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            return v
        return conv(dataclasses.asdict(self))


_SECTIONS = {
    "scenario": ScenarioConfig,
    "afdm": AfdmSettings,
    "estimator": EstimatorSettings,
    "sweep": SweepSettings,
}


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{unknown[0]}: unknown field")
    kwargs = {}
    for key, value in data.items():
        sub = _SECTIONS.get(key) if cls is ExperimentConfig else None
        kwargs[key] = _build(sub, value, key) if sub else value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data or {}, "")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))


def build_preamble(cfg: ExperimentConfig) -> FlagPreamble:
    est = cfg.estimator
    kind = est.peak_kind
    if kind is None:
        odd_prime = is_prime(cfg.preamble_len) and cfg.preamble_len > 2
        kind = PeakKind.WEIL_LEGENDRE if odd_prime else PeakKind.RANDOM_POLYPHASE
    return make_flag(CurtainParams.default(cfg.preamble_len, est.chirp_rate), kind, est.peak_seed)


def build_afdm(cfg: ExperimentConfig) -> AfdmConfig:
    s = cfg.afdm
    nu_max = rescaled_max_doppler(cfg.scenario.max_doppler, cfg.preamble_len, s.n)
    c1 = s.c1 if s.c1 is not None else full_diversity_c1(s.n, nu_max)
    cpp = s.cpp_len if s.cpp_len is not None else cfg.scenario.max_delay
    return AfdmConfig(s.n, c1, s.c2, cpp)


@dataclass(frozen=True)
class _Context:
    preamble: FlagPreamble
    afdm: AfdmConfig
    prefix_len: int


def _context(cfg: ExperimentConfig) -> _Context:
    return _Context(build_preamble(cfg), build_afdm(cfg), cfg.scenario.max_delay)


def _intercept(delay: int, doppler: int, n: int, xi: int) -> int:
    return (doppler_to_omega(doppler, n) - xi * delay) % n


def _strongest(chan: ChannelRealization):
    return max(chan.paths, key=lambda p: abs(p.gain))


def _estimator(ctx: _Context, cfg: ExperimentConfig, **overrides) -> EstimatorConfig:
    kw = dict(num_paths=cfg.num_paths, num_candidates=cfg.estimator.num_candidates,
              threshold=cfg.estimator.threshold)
    if cfg.estimator.search_window:
        kw.update(max_delay=cfg.scenario.max_delay, max_doppler=cfg.scenario.max_doppler)
    kw.update(overrides)
    return EstimatorConfig(ctx.preamble, **kw)


def _mse_time_domain(truth: ChannelRealization, est, afdm: AfdmConfig) -> float:
    # A H A^H is a unitary similarity, so the effective-domain MSE equals the time-domain one
    h = time_domain_matrix(truth, afdm.n, afdm.c1)
    chan_hat, _ = reconstruct_channel(est, afdm.cpp_len, truth.doppler_grid)
    return channel_mse(h, time_domain_matrix(chan_hat, afdm.n, afdm.c1))


def run_trial(cfg: ExperimentConfig, trial: int, ctx: _Context | None = None) -> list[TrialRecord]:
    """All records of one trial across the SNR grid, in a fixed order."""
    if ctx is None:
        ctx = _context(cfg)
    f = ctx.preamble.samples
    lp = f.size
    xi = ctx.preamble.chirp_rate
    ss_chan, ss_pnoise, ss_bits, ss_dnoise = np.random.SeedSequence([cfg.base_seed, trial]).spawn(4)

    chan = draw_channel(cfg.scenario, np.random.default_rng(ss_chan), doppler_grid=lp)
    burst = add_cpp(np.sqrt(lp) * f, ctx.prefix_len)
    rx_clean = strip_cpp(apply_channel(burst, chan, ctx.prefix_len), ctx.prefix_len)
    w_pre = complex_normal(lp, np.random.default_rng(ss_pnoise))
    truth_cells = chan.cells
    strongest = _strongest(chan)

    if cfg.study is Study.BER:
        afdm = ctx.afdm
        bits = np.random.default_rng(ss_bits).integers(0, 2, 2 * afdm.n).astype(np.int8)
        rx_data = strip_cpp(apply_channel(modulate(qam_map(bits), afdm), chan, afdm.cpp_len), afdm.cpp_len)
        w_data = complex_normal(afdm.n, np.random.default_rng(ss_dnoise))
        h_true = effective_channel(chan, afdm)

    records = []
    for snr in cfg.snr_grid_db:
        n0 = noise_variance(snr)
        r = (rx_clean + np.sqrt(n0) * w_pre) / np.sqrt(lp)

        if cfg.study is Study.MSE:
            for name, fn in (("traditional", estimate_traditional), ("proposed", estimate_proposed)):
                res = fn(r, _estimator(ctx, cfg))
                det, miss, fa = match_paths(truth_cells, res.cells, cfg.match_tolerance)
                records.append(TrialRecord(
                    name, snr, mse=_mse_time_domain(chan, res.paths, ctx.afdm),
                    detected=det, misses=miss, false_alarms=fa, alarm_slots=len(res.paths),
                    fft_calls=res.counters.fft_calls))

        elif cfg.study is Study.PDPM:
            res = estimate_proposed(r, _estimator(ctx, cfg))
            det, miss, fa = match_paths(truth_cells, res.cells, cfg.match_tolerance)
            records.append(TrialRecord("proposed", snr, detected=det, misses=miss, false_alarms=fa,
                                       alarm_slots=len(res.paths), fft_calls=res.counters.fft_calls))
            hit, _, _ = match_paths([(strongest.delay, int(strongest.doppler))], res.cells, cfg.match_tolerance)
            records.append(TrialRecord("proposed_strongest", snr, detected=hit, misses=1 - hit,
                                       fft_calls=res.counters.fft_calls))

        elif cfg.study in (Study.SWEEP_K, Study.SWEEP_GAMMA):
            a = line_search(r, f)
            est_cfg = _estimator(ctx, cfg)
            if est_cfg.max_delay is not None:
                a = np.where(admissible_intercepts(est_cfg.window(), xi), a, 0.0)
            true_ks = {_intercept(t, v, lp, xi) for t, v in truth_cells}
            if cfg.study is Study.SWEEP_K:
                target = _intercept(strongest.delay, int(strongest.doppler), lp, xi)
                for k in cfg.sweep.k_values:
                    cands = set(select_candidates(a, k, cfg.estimator.threshold).tolist())
                    fft = estimate_proposed(r, _estimator(ctx, cfg, num_candidates=k)).counters.fft_calls
                    hit = int(target in cands)
                    records.append(TrialRecord(f"K={k}", snr, detected=hit, misses=1 - hit,
                                               false_alarms=len(cands - true_ks), alarm_slots=k,
                                               fft_calls=fft))
            else:
                k = cfg.estimator.num_candidates
                for g in cfg.sweep.gamma_values:
                    cands = set(select_candidates(a, k, g).tolist())
                    fft = estimate_proposed(r, _estimator(ctx, cfg, threshold=g)).counters.fft_calls
                    records.append(TrialRecord(f"gamma={g:g}", snr, detected=len(true_ks & cands),
                                               misses=len(true_ks - cands),
                                               false_alarms=len(cands - true_ks), alarm_slots=k,
                                               fft_calls=fft))

        elif cfg.study is Study.BER:
            afdm = ctx.afdm
            y = demodulate(rx_data + np.sqrt(n0) * w_data, afdm)
            channels = {"perfect": (h_true, None)}
            for name, fn in (("traditional", estimate_traditional), ("proposed", estimate_proposed)):
                res = fn(r, _estimator(ctx, cfg))
                chan_hat, _ = reconstruct_channel(res.paths, afdm.cpp_len, lp)
                channels[name] = (effective_channel(chan_hat, afdm), res)
            for name, (h, res) in channels.items():
                rx_bits = qam_demap(lmmse_equalize(y, h, n0))
                errors = int(np.count_nonzero(rx_bits != bits))
                if res is None:
                    records.append(TrialRecord(name, snr, mse=0.0, bit_errors=errors, bits_total=bits.size))
                else:
                    det, miss, fa = match_paths(truth_cells, res.cells, cfg.match_tolerance)
                    records.append(TrialRecord(
                        name, snr, mse=channel_mse(h_true, h), detected=det, misses=miss,
                        false_alarms=fa, alarm_slots=len(res.paths), bit_errors=errors,
                        bits_total=bits.size, fft_calls=res.counters.fft_calls))
    return records


def _run_trials(cfg: ExperimentConfig) -> list[list[TrialRecord]]:
    if cfg.workers == 1:
        ctx = _context(cfg)
        return [run_trial(cfg, t, ctx) for t in range(cfg.trials)]
    chunk = max(1, math.ceil(cfg.trials / (4 * cfg.workers)))
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(partial(run_trial, cfg), range(cfg.trials), chunksize=chunk))


def summarize(cfg: ExperimentConfig, per_trial: list[list[TrialRecord]]) -> list[dict]:
    """Aggregate records per ``(param, snr)`` in first-appearance order."""
    groups: dict[tuple[str, float], list[TrialRecord]] = {}
    for records in per_trial:
        for rec in records:
            groups.setdefault((rec.param, rec.snr_db), []).append(rec)
    rows = []
    for (param, snr), recs in groups.items():
        row = {"study": cfg.study.value, "param": param, "snr_db": snr}
        row.update(aggregate(recs))
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def _write_outputs(cfg: ExperimentConfig, csv_text: str, out_dir) -> FsPath:
    out = FsPath(out_dir if out_dir is not None else cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg.study.value}.csv"
    csv_path.write_text(csv_text)
    sidecar = {"config": cfg.to_dict(), "preamble": build_preamble(cfg).params(),
               "afdm": dataclasses.asdict(build_afdm(cfg))}
    (out / f"{cfg.study.value}.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path


def run_study(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> list[dict]:
    """Run one study and (optionally) write ``<study>.csv`` plus a JSON sidecar."""
    if cfg.study is Study.AF_HEATMAP:
        f = build_preamble(cfg).samples
        grid = full_grid(f, f)
        if write:
            out = FsPath(out_dir if out_dir is not None else cfg.output_path)
            out.mkdir(parents=True, exist_ok=True)
            grid.to_csv(out / "af_heatmap.csv")
        return []
    log.info("running %s: %d trials x %d SNR points", cfg.study.value, cfg.trials, len(cfg.snr_grid_db))
    rows = summarize(cfg, _run_trials(cfg))
    if write:
        _write_outputs(cfg, rows_to_csv(rows), out_dir)
    return rows


def run_sweep_k(cfg: ExperimentConfig, **kw) -> list[dict]:
    return run_study(dataclasses.replace(cfg, study=Study.SWEEP_K), **kw)


def run_sweep_gamma(cfg: ExperimentConfig, **kw) -> list[dict]:
    return run_study(dataclasses.replace(cfg, study=Study.SWEEP_GAMMA), **kw)


def table(rows: list[dict], column: str) -> dict[str, dict[float, float]]:
    """``{param: {snr: value}}`` view of a result table."""
    out: dict[str, dict[float, float]] = {}
    for row in rows:
        out.setdefault(row["param"], {})[row["snr_db"]] = row[column]
    return out


def combined_error_argmin(rows: list[dict]) -> float:
    """Threshold whose SNR-averaged ``pm + pfa`` is smallest (first one on ties)."""
    pm, pfa = table(rows, "pm"), table(rows, "pfa")
    scores = {float(p.split("=")[1]): np.mean([pm[p][s] + pfa[p][s] for s in pm[p]]) for p in pm}
    return min(scores, key=lambda g: (scores[g], g))
