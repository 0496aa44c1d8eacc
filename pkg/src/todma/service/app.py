"""FastAPI service wrapping the simulator: sweeps, single trials, latency."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..harness import ConfigError, run_sweep, run_trial
from ..metrics import LatencyModel, orth_latency, todma_latency
from ..predictor import BridgeError
from .schemas import (LatencyRequest, LatencyResponse, LatencyRow, ResultRowModel,
                      SweepRequest, SweepResponse, TrialRequest, TrialResponse)


def create_app() -> FastAPI:
    app = FastAPI(title="todma", description="Token-domain multiple access link simulator")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        try:
            rows = run_sweep(request.to_config())
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except (BridgeError, OSError, ValueError) as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return SweepResponse(rows=[ResultRowModel.from_row(r) for r in rows])

    @app.post("/trial", response_model=TrialResponse)
    def trial(request: TrialRequest) -> TrialResponse:
        config = request.to_config()
        try:
            config.validate()
            outcome = run_trial(config, request.trial_index)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except (BridgeError, OSError, ValueError) as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return TrialResponse(
            ter=outcome.ter,
            mask_rate=outcome.mask_rate,
            unresolved_mask_rate=outcome.unresolved_mask_rate,
            collision_rate=outcome.collision_rate,
            errors_per_device=[int(e) for e in outcome.errors_per_device],
            device_ids=[int(d) for d in outcome.device_ids],
        )

    @app.post("/latency", response_model=LatencyResponse)
    def latency(request: LatencyRequest) -> LatencyResponse:
        try:
            model = LatencyModel(
                n_subcarriers=request.subcarriers,
                subcarrier_spacing=request.subcarrier_spacing,
                target_ber=request.target_ber,
                snr_linear=10.0 ** (request.snr_db / 10.0))
            rows = [
                LatencyRow(
                    k_total=kt,
                    todma_latency_s=todma_latency(request.codeword_len, request.n_tokens, model),
                    orth_latency_s=orth_latency(kt, request.n_tokens, request.q, model))
                for kt in request.k_total
            ]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return LatencyResponse(rows=rows)

    return app
