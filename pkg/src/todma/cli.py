"""Command-line front end: a thin client for the simulation service.

``todma`` posts one sweep request to the service (an in-process app by
default, or a remote server via ``--server``) and writes the returned rows
as CSV or JSON.  ``todma-serve`` runs the HTTP service itself.
"""

from __future__ import annotations

import sys

import click
import httpx

from .harness import CSV_COLUMNS, PREDICTORS, ResultRow, rows_to_csv, rows_to_json


def _comma_list(text: str, convert, what: str) -> list:
    try:
        return [convert(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise click.ClickException(f"bad {what} list {text!r}") from None


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # In-process transport: the CLI still speaks HTTP to the service app,
    # it just skips the network.
    import warnings

    with warnings.catch_warnings():
        # starlette's httpx-backed test transport warns about httpx2; harmless here.
        warnings.simplefilter("ignore", DeprecationWarning)
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _rows_from_payload(payload: dict) -> list[ResultRow]:
    rows = []
    for item in payload["rows"]:
        rows.append(ResultRow(
            k=item["K"], snr_db=item["snr_db"], predictor=item["predictor"],
            trials=item["trials"], ter_mean=item["ter_mean"], ter_stderr=item["ter_stderr"],
            mask_rate_mean=item["mask_rate_mean"],
            collision_rate_mean=item["collision_rate_mean"],
            todma_latency_s=item["todma_latency_s"], orth_latency_s=item["orth_latency_s"],
            wall_s=item["wall_s"]))
    return rows


@click.command(context_settings={"show_default": True})
@click.option("--devices", type=int, default=500, help="Total device count K_T.")
@click.option("--active", default="8", help="Active device count K, or comma list to sweep.")
@click.option("--antennas", type=int, default=32, help="Receive antennas M.")
@click.option("--codebook-size", type=int, default=64, help="Token/modulation codebook size Q.")
@click.option("--seq-len", type=int, default=32, help="Tokens per device N (= slots).")
@click.option("--snr-db", default="25", help="SNR in dB, or comma list to sweep.")
@click.option("--trials", type=int, default=500, help="Monte-Carlo trials per sweep point.")
@click.option("--seed", type=int, default=0, help="Master seed (u64).")
@click.option("--predictor", default="markov",
              help="Masked-token predictor(s): markov|random|genie|bridge, comma list allowed.")
@click.option("--bridge-endpoint", default=None,
              help="Fill-mask service endpoint (host:port or stdio:<cmd>).")
@click.option("--source", default="markov:0.3",
              help="Token source: markov:<concentration>, uniform, or file:<path>.")
@click.option("--noiseless", is_flag=True,
              help="Run with sigma^2 = 0 and a 1e-9 detection threshold.")
@click.option("--output", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Result file; stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              help="Result format.")
@click.option("--workers", type=int, default=1, help="Parallel trial workers.")
@click.option("--subcarriers", type=int, default=1024, help="OFDM subcarriers N_s.")
@click.option("--subcarrier-spacing", type=float, default=15000.0,
              help="Subcarrier spacing f_s in Hz.")
@click.option("--target-ber", type=float, default=1e-3,
              help="Target BER of the orthogonal adaptive-QAM baseline.")
@click.option("--bridge-timeout", type=float, default=30.0,
              help="Bridge response timeout in seconds.")
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; runs the service in-process when omitted.")
def main(devices, active, antennas, codebook_size, seq_len, snr_db, trials, seed, predictor,
         bridge_endpoint, source, noiseless, output, fmt, workers, subcarriers,
         subcarrier_spacing, target_ber, bridge_timeout, server):
    """Run a seeded Monte-Carlo sweep and emit one result row per sweep point."""
    predictors = _comma_list(predictor, str, "predictor")
    for p in predictors:
        if p not in PREDICTORS:
            raise click.ClickException(
                f"unknown predictor {p!r}; choose from {', '.join(PREDICTORS)}")
    payload = {
        "devices": devices,
        "active": _comma_list(active, int, "active-device"),
        "antennas": antennas,
        "codebook_size": codebook_size,
        "seq_len": seq_len,
        "snr_db": _comma_list(snr_db, float, "snr-db"),
        "trials": trials,
        "seed": seed,
        "predictor": predictors,
        "source": source,
        "noiseless": noiseless,
        "bridge_endpoint": bridge_endpoint,
        "bridge_timeout": bridge_timeout,
        "subcarriers": subcarriers,
        "subcarrier_spacing": subcarrier_spacing,
        "target_ber": target_ber,
        "workers": workers,
    }
    try:
        with _client(server) as client:
            response = client.post("/sweep", json=payload)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"service request failed: {exc}") from exc
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(str(detail))
    rows = _rows_from_payload(response.json())
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    if output:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise click.ClickException(f"cannot write {output}: {exc}") from exc
        click.echo(f"wrote {len(rows)} rows ({', '.join(CSV_COLUMNS[:3])}, ...) to {output}",
                   err=True)
    else:
        sys.stdout.write(text)


@click.command(context_settings={"show_default": True})
@click.option("--host", default="127.0.0.1", help="Bind address.")
@click.option("--port", type=int, default=8000, help="Bind port.")
def serve(host, port):
    """Run the simulation HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
