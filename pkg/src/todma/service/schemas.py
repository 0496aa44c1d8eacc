"""Pydantic request/response models for the simulation service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..harness import ResultRow, SourceSpec, SweepConfig


class SweepRequest(BaseModel):
    """Sweep parameters; field names mirror the CLI flags."""

    devices: int = Field(default=500, description="total device count K_T")
    active: list[int] = Field(default=[8], description="active-device sweep axis K")
    antennas: int = 32
    codebook_size: int = 64
    seq_len: int = 32
    snr_db: list[float] = [25.0]
    trials: int = 500
    seed: int = 0
    predictor: list[str] = ["markov"]
    source: str = "markov:0.3"
    noiseless: bool = False
    bridge_endpoint: str | None = None
    bridge_timeout: float = 30.0
    subcarriers: int = 1024
    subcarrier_spacing: float = 15_000.0
    target_ber: float = 1e-3
    workers: int = 1

    def to_config(self) -> SweepConfig:
        return SweepConfig(
            k_total=self.devices,
            k_values=tuple(self.active),
            n_antennas=self.antennas,
            q=self.codebook_size,
            n_slots=self.seq_len,
            snr_db_values=tuple(self.snr_db),
            trials=self.trials,
            seed=self.seed,
            predictors=tuple(self.predictor),
            source=SourceSpec.parse(self.source),
            noiseless=self.noiseless,
            bridge_endpoint=self.bridge_endpoint,
            bridge_timeout=self.bridge_timeout,
            n_subcarriers=self.subcarriers,
            subcarrier_spacing=self.subcarrier_spacing,
            target_ber=self.target_ber,
            workers=self.workers,
        )


class ResultRowModel(BaseModel):
    """One sweep coordinate's results; keys match the CSV columns."""

    K: int
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

    @classmethod
    def from_row(cls, row: ResultRow) -> "ResultRowModel":
        return cls(**row.as_dict())


class SweepResponse(BaseModel):
    rows: list[ResultRowModel]


class TrialRequest(BaseModel):
    """Single-trial run for debugging; one coordinate, one trial index."""

    devices: int = 500
    active: int = 8
    antennas: int = 32
    codebook_size: int = 64
    seq_len: int = 32
    snr_db: float = 25.0
    seed: int = 0
    trial_index: int = 0
    predictor: str = "markov"
    source: str = "markov:0.3"
    noiseless: bool = False
    bridge_endpoint: str | None = None

    def to_config(self) -> SweepConfig:
        return SweepConfig(
            k_total=self.devices,
            k_values=(self.active,),
            snr_db_values=(self.snr_db,),
            n_antennas=self.antennas,
            q=self.codebook_size,
            n_slots=self.seq_len,
            trials=1,
            seed=self.seed,
            predictors=(self.predictor,),
            source=SourceSpec.parse(self.source),
            noiseless=self.noiseless,
            bridge_endpoint=self.bridge_endpoint,
        )


class TrialResponse(BaseModel):
    ter: float
    mask_rate: float
    unresolved_mask_rate: float
    collision_rate: float
    errors_per_device: list[int]
    device_ids: list[int]


class LatencyRequest(BaseModel):
    """Latency-model evaluation over a K_T axis (no Monte-Carlo involved)."""

    k_total: list[int] = [250, 500, 1000, 2000]
    codeword_len: int = 1024
    n_tokens: int = 256
    q: int = 1024
    subcarriers: int = 1024
    subcarrier_spacing: float = 15_000.0
    target_ber: float = 1e-3
    snr_db: float = 25.0


class LatencyRow(BaseModel):
    k_total: int
    todma_latency_s: float
    orth_latency_s: float


class LatencyResponse(BaseModel):
    rows: list[LatencyRow]
