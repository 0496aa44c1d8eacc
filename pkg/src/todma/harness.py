"""Seeded Monte-Carlo trials and parameter sweeps over the full pipeline.

One trial runs tokenization, token modulation, non-orthogonal multiple
access, projection detection, CSI-anchored assignment, and masked-token
prediction, then scores the reconstruction.  Per-trial randomness comes
from counter-based Philox streams keyed by (master seed, trial index,
lane), so trials are reproducible and independent of execution order, and
the same trial index re-run under a different predictor sees identical
physics.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .assigner import AssignmentState, fine_grained_update, initial_assignment
from .channel import ScenarioConfig, sample_rayleigh, snr_to_noise_variance, transmit_slot
from .detector import default_threshold, detect, project
from .metrics import (LatencyModel, TrialOutcome, errors_per_device, orth_latency,
                      todma_latency, token_error_rate)
from .modem import ModulationCodebook, build_dft_codebook, modulate_tokens
from .predictor import (BridgeClient, PredictionRequest, genie_predict, markov_predict,
                        mask_positions, random_predict)
from .sources import (SourceModel, TokenFile, dirichlet_model, load_sequences,
                      sample_sequences, uniform_model)

__all__ = [
    "ConfigError",
    "SourceSpec",
    "SweepConfig",
    "ResultRow",
    "PREDICTORS",
    "NOISELESS_THRESHOLD",
    "trial_stream",
    "build_source_model",
    "simulate_frame",
    "predict_sequences",
    "run_trial",
    "run_sweep",
    "rows_to_csv",
    "rows_to_json",
    "write_rows",
    "CSV_COLUMNS",
]

PREDICTORS = ("markov", "random", "genie", "bridge")

# sigma^2 = 0 would make the 2*sigma^2 threshold degenerate, so noiseless
# runs use a small positive override instead.
NOISELESS_THRESHOLD = 1e-9


class ConfigError(ValueError):
    """Invalid sweep configuration (reported as a one-line CLI diagnostic)."""


@dataclass(frozen=True)
class SourceSpec:
    """Token source selector: a Markov model or an external token file."""

    kind: str  # "markov" | "file"
    concentration: float | None = None
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "SourceSpec":
        """Parse 'markov:<concentration>', 'uniform', or 'file:<path>'."""
        if text == "uniform":
            return cls(kind="markov", concentration=float("inf"))
        if text.startswith("markov:"):
            raw = text[len("markov:"):]
            try:
                conc = float(raw)
            except ValueError:
                raise ConfigError(f"bad concentration in source spec {text!r}") from None
            return cls(kind="markov", concentration=conc)
        if text.startswith("file:"):
            return cls(kind="file", path=text[len("file:"):])
        raise ConfigError(f"source must be 'markov:<concentration>', 'uniform' or "
                          f"'file:<path>', got {text!r}")

    def label(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        if self.concentration == float("inf"):
            return "uniform"
        return f"markov:{self.concentration}"


@dataclass(frozen=True)
class SweepConfig:
    """Everything one sweep needs: scenario, source, predictors, axes, seed."""

    k_total: int = 500
    k_values: tuple = (8,)
    n_antennas: int = 32
    q: int = 64
    n_slots: int = 32
    snr_db_values: tuple = (25.0,)
    trials: int = 500
    seed: int = 0
    predictors: tuple = ("markov",)
    source: SourceSpec = SourceSpec(kind="markov", concentration=0.3)
    noiseless: bool = False
    bridge_endpoint: str | None = None
    bridge_timeout: float = 30.0
    n_subcarriers: int = 1024
    subcarrier_spacing: float = 15_000.0
    target_ber: float = 1e-3
    workers: int = 1

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.k_values or not self.snr_db_values or not self.predictors:
            raise ConfigError("sweep axes (k_values, snr_db_values, predictors) must be nonempty")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        for k in self.k_values:
            if not 1 <= k <= self.k_total:
                raise ConfigError(f"active count {k} must lie in [1, k_total={self.k_total}]")
        if self.n_antennas < 1 or self.n_slots < 1 or self.q < 2:
            raise ConfigError("need n_antennas >= 1, n_slots >= 1, q >= 2")
        for p in self.predictors:
            if p not in PREDICTORS:
                raise ConfigError(f"unknown predictor {p!r}; choose from {PREDICTORS}")
        if "bridge" in self.predictors and not self.bridge_endpoint:
            raise ConfigError("the bridge predictor needs --bridge-endpoint")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.workers > 1 and "bridge" in self.predictors:
            raise ConfigError("the bridge predictor holds one connection; run with workers=1")
        if not 0 < self.target_ber < 0.2:
            raise ConfigError("target_ber must lie in (0, 0.2)")
        if self.source.kind == "markov":
            if self.source.concentration is None or not self.source.concentration > 0:
                raise ConfigError("markov source needs a positive concentration")
        elif self.source.kind == "file":
            if not self.source.path:
                raise ConfigError("file source needs a path")
        else:
            raise ConfigError(f"unknown source kind {self.source.kind!r}")


@dataclass(frozen=True)
class ResultRow:
    """One sweep coordinate's aggregated results (one CSV line)."""

    k: int
    snr_db: float
    predictor: str
    trials: int
    ter_mean: float
    ter_stderr: float
    mask_rate_mean: float
    collision_rate_mean: float
    todma_latency_s: float
    orth_latency_s: float
    wall_s: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["K"] = d.pop("k")
        return {c: d[c] for c in CSV_COLUMNS}


CSV_COLUMNS = ["K", "snr_db", "predictor", "trials", "ter_mean", "ter_stderr",
               "mask_rate_mean", "collision_rate_mean", "todma_latency_s",
               "orth_latency_s", "wall_s"]


# ---------------------------------------------------------------------------
# Random streams.  Lane 0 seeds the shared source model; the remaining lanes
# give each trial disjoint counter ranges per purpose.

_LANE_MODEL = 0
_LANE_ACTIVITY = 1
_LANE_SOURCE = 2
_LANE_CHANNEL = 3
_LANE_NOISE = 4
_LANE_PREDICTOR = 5


def trial_stream(seed: int, trial_index: int, lane: int) -> np.random.Generator:
    """Philox stream at counter block (trial_index, lane) under the master key."""
    counter = np.zeros(4, dtype=np.uint64)
    counter[2] = np.uint64(trial_index)
    counter[3] = np.uint64(lane)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=counter))


def build_source_model(config: SweepConfig) -> SourceModel | None:
    """Shared source model for a sweep (None for file-backed sources)."""
    if config.source.kind != "markov":
        return None
    conc = config.source.concentration
    if conc == float("inf"):
        return uniform_model(config.q)
    return dirichlet_model(config.q, conc, trial_stream(config.seed, 0, _LANE_MODEL))


def _load_token_file(config: SweepConfig) -> TokenFile:
    tf = load_sequences(config.source.path)
    if tf.q != config.q:
        raise ConfigError(f"token file declares Q={tf.q}, sweep expects Q={config.q}")
    if tf.n != config.n_slots:
        raise ConfigError(f"token file declares N={tf.n}, sweep expects N={config.n_slots}")
    if len(tf) == 0:
        raise ConfigError(f"token file {config.source.path} holds no sequences")
    return tf


# ---------------------------------------------------------------------------
# Single-trial pipeline.


def simulate_frame(tokens: np.ndarray, codebook: ModulationCodebook, channels: np.ndarray,
                   sigma2: float, threshold: float, noise_rng: np.random.Generator | None):
    """Transmit K token sequences through the channel and assign detections.

    Returns (detections, state_after_initial_assignment, state_after_update).
    """
    k, n_slots = np.asarray(tokens).shape
    detections = []
    for s in range(n_slots):
        symbols = modulate_tokens(tokens[:, s], codebook).T  # (K, L)
        received = transmit_slot(symbols, channels, sigma2, noise_rng)
        detections.append(detect(project(received, codebook), threshold))
    state0 = initial_assignment(detections, channels, threshold)
    return detections, state0, fine_grained_update(state0)


def predict_sequences(state: AssignmentState, predictor: str | None, *,
                      model: SourceModel | None = None, truth: np.ndarray | None = None,
                      rng: np.random.Generator | None = None,
                      client: BridgeClient | None = None) -> np.ndarray:
    """Fill the remaining masks of every device with the chosen predictor."""
    estimated = state.sequences.copy()
    for dev in range(state.k):
        masks = mask_positions(state.sequences[dev])
        if masks.size == 0 or predictor is None:
            continue
        request = PredictionRequest(
            state.sequences[dev],
            {int(n): state.candidate_sets[(dev, int(n))] for n in masks})
        if predictor == "markov":
            estimated[dev] = markov_predict(request, model)
        elif predictor == "random":
            estimated[dev] = random_predict(request, state.q, rng)
        elif predictor == "genie":
            estimated[dev] = genie_predict(request, truth[dev])
        elif predictor == "bridge":
            estimated[dev] = client.predict(request, state.q)
        else:
            raise ConfigError(f"unknown predictor {predictor!r}")
    return estimated


def run_trial(config: SweepConfig, trial_index: int, *, k: int | None = None,
              snr_db: float | None = None, predictor: str | None = None,
              model: SourceModel | None = None, codebook: ModulationCodebook | None = None,
              token_file: TokenFile | None = None,
              client: BridgeClient | None = None) -> TrialOutcome:
    """Run one full pipeline trial at a given sweep coordinate.

    Coordinates default to the first entry of each sweep axis.  Identical
    (config, trial_index, coordinate) always yields an identical outcome.
    """
    k = config.k_values[0] if k is None else k
    snr_db = config.snr_db_values[0] if snr_db is None else snr_db
    predictor = config.predictors[0] if predictor is None else predictor
    try:
        ScenarioConfig(k_total=config.k_total, k_active=k, n_antennas=config.n_antennas,
                       n_slots=config.n_slots, q=config.q, snr_db=float(snr_db))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if config.noiseless:
        sigma2, threshold = 0.0, NOISELESS_THRESHOLD
    else:
        sigma2 = snr_to_noise_variance(snr_db)
        threshold = default_threshold(sigma2)
    if model is None and config.source.kind == "markov":
        model = build_source_model(config)
    if token_file is None and config.source.kind == "file":
        token_file = _load_token_file(config)
    if predictor == "markov" and model is None:
        raise ConfigError("the markov predictor needs a markov source model")
    if codebook is None:
        codebook = build_dft_codebook(config.q)

    seed = config.seed
    activity_rng = trial_stream(seed, trial_index, _LANE_ACTIVITY)
    device_ids = activity_rng.choice(config.k_total, size=k, replace=False)

    source_rng = trial_stream(seed, trial_index, _LANE_SOURCE)
    if token_file is not None:
        picks = source_rng.integers(0, len(token_file), size=k)
        tokens = np.stack([token_file[int(i)] for i in picks])
    else:
        tokens = sample_sequences(model, k, config.n_slots, source_rng)

    channels = sample_rayleigh(k, config.n_antennas, trial_stream(seed, trial_index, _LANE_CHANNEL))
    noise_rng = trial_stream(seed, trial_index, _LANE_NOISE)
    _, state0, state1 = simulate_frame(tokens, codebook, channels, sigma2, threshold, noise_rng)

    estimated = predict_sequences(
        state1, predictor, model=model, truth=tokens,
        rng=trial_stream(seed, trial_index, _LANE_PREDICTOR), client=client)

    n_cells = tokens.size
    collision_rate = float(np.mean([r.size >= 1 for r in state0.residual_sets]))
    return TrialOutcome(
        ter=token_error_rate(estimated, tokens),
        mask_rate=state0.mask_count() / n_cells,
        unresolved_mask_rate=state1.mask_count() / n_cells,
        collision_rate=collision_rate,
        errors_per_device=errors_per_device(estimated, tokens),
        device_ids=device_ids,
    )


# ---------------------------------------------------------------------------
# Sweeps.


def _trial_values(config: SweepConfig, trial_index: int, k: int, snr_db: float,
                  predictor: str, model, codebook, token_file) -> tuple:
    out = run_trial(config, trial_index, k=k, snr_db=snr_db, predictor=predictor,
                    model=model, codebook=codebook, token_file=token_file)
    return out.ter, out.mask_rate, out.collision_rate


def _run_point(config: SweepConfig, k: int, snr_db: float, predictor: str,
               model, codebook, token_file, client) -> ResultRow:
    t0 = time.perf_counter()
    trials = config.trials
    ters = np.empty(trials)
    mask_rates = np.empty(trials)
    collision_rates = np.empty(trials)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = pool.map(
                _trial_values,
                [config] * trials, range(trials), [k] * trials, [snr_db] * trials,
                [predictor] * trials, [model] * trials, [codebook] * trials,
                [token_file] * trials,
                chunksize=max(1, trials // (4 * config.workers)))
            for i, (ter, mask_rate, collision_rate) in enumerate(results):
                ters[i], mask_rates[i], collision_rates[i] = ter, mask_rate, collision_rate
    else:
        for i in range(trials):
            out = run_trial(config, i, k=k, snr_db=snr_db, predictor=predictor,
                            model=model, codebook=codebook, token_file=token_file,
                            client=client)
            ters[i], mask_rates[i], collision_rates[i] = out.ter, out.mask_rate, out.collision_rate
    wall = time.perf_counter() - t0

    latency_model = LatencyModel(
        n_subcarriers=config.n_subcarriers, subcarrier_spacing=config.subcarrier_spacing,
        target_ber=config.target_ber, snr_linear=10.0 ** (snr_db / 10.0))
    try:
        orth_s = orth_latency(config.k_total, config.n_slots, config.q, latency_model)
    except ValueError:
        orth_s = float("nan")  # q not a power of two: baseline undefined
    stderr = float(np.std(ters, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return ResultRow(
        k=k, snr_db=float(snr_db), predictor=predictor, trials=trials,
        ter_mean=float(ters.mean()), ter_stderr=stderr,
        mask_rate_mean=float(mask_rates.mean()),
        collision_rate_mean=float(collision_rates.mean()),
        todma_latency_s=todma_latency(codebook.l, config.n_slots, latency_model),
        orth_latency_s=orth_s, wall_s=wall)


def run_sweep(config: SweepConfig) -> list:
    """One ResultRow per (K, SNR, predictor) coordinate, in axis order."""
    config.validate()
    model = build_source_model(config)
    token_file = _load_token_file(config) if config.source.kind == "file" else None
    if model is None and "markov" in config.predictors:
        raise ConfigError("the markov predictor needs a markov source model")
    codebook = build_dft_codebook(config.q)
    client = None
    rows = []
    try:
        if "bridge" in config.predictors:
            client = BridgeClient(config.bridge_endpoint, timeout=config.bridge_timeout)
        for k in config.k_values:
            for snr_db in config.snr_db_values:
                for predictor in config.predictors:
                    rows.append(_run_point(config, k, snr_db, predictor,
                                           model, codebook, token_file, client))
    finally:
        if client is not None:
            client.close()
    return rows


# ---------------------------------------------------------------------------
# Output formats.  CSV columns are fixed; JSON is an array of objects with
# identical keys.  Every run with the same config reproduces these bytes
# except for the wall_s column.


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        d = row.as_dict()
        lines.append(",".join(_fmt(d[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([row.as_dict() for row in rows], indent=2) + "\n"


def write_rows(rows: Sequence[ResultRow], path: str | Path, fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    Path(path).write_text(text, encoding="utf-8")
