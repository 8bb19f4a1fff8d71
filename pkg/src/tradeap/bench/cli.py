"""Benchmark CLI: corpus generation, load runs, and parameter sweeps."""
from __future__ import annotations

import json
from pathlib import Path

import click

from .datagen import CorpusSpec, generate_corpus
from .harness import LoadConfig, run_load, sweep

KIND_MAP = {"send-rate": "SEND_RATE", "peers": "PEER_COUNT", "geo": "GEO"}


def _load_spec(path: str) -> CorpusSpec:
    data = json.loads(Path(path).read_text())
    return CorpusSpec(
        num_pos=data.get("numPOs", 50),
        line_items_per_po=tuple(data.get("lineItemsPerPO", [1, 3])),
        discrepancy_rates=data.get("discrepancyRates", CorpusSpec().discrepancy_rates),
        quantity_range=tuple(data.get("quantityRange", [10, 500])),
        price_range=tuple(data.get("priceRange", [100, 100000])),
        currency=data.get("currency", "USD"),
        seed=data.get("seed", 0),
    )


def _load_config(path: str | None) -> LoadConfig:
    if path is None:
        return LoadConfig()
    data = json.loads(Path(path).read_text())
    return LoadConfig(
        tx_mix=data.get("transactionMix", {"computeCA": 1.0}),
        send_rate=data.get("sendRate", 500.0),
        tx_count=data.get("txCount", 2000),
        num_dcs=data.get("numDcs", 1),
        peers_per_org=data.get("peersPerOrg", 1),
        block_size=data.get("blockSize", 100),
        block_timeout=data.get("blockTimeoutMs", 500) / 1000.0,
        seed=data.get("seed", 0),
    )


@click.group()
def main():
    """Load benchmarking for the accounts-payable ledger simulator."""


@main.command()
@click.option("--spec", "spec_path", required=True, help="corpus spec JSON")
@click.option("--out", "out_dir", required=True, help="output directory")
def generate(spec_path, out_dir):
    """Generate a synthetic EDI corpus."""
    corpus = generate_corpus(_load_spec(spec_path))
    count = corpus.write_files(out_dir)
    click.echo(f"wrote {count} documents to {out_dir}")


@main.command()
@click.option("--config", "config_path", default=None, help="load config JSON")
@click.option("--out", "out_path", required=True, help="report JSON path")
def run(config_path, out_path):
    """Run one load configuration and write the report."""
    config = _load_config(config_path)
    report = run_load(config)
    Path(out_path).write_text(report.to_json())
    for fn, stats in sorted(report.per_type.items()):
        click.echo(
            f"{fn}: throughput={stats.throughput:.1f} tx/s "
            f"latency mean={stats.latency_mean:.3f}s p95={stats.latency_p95:.3f}s"
        )


@main.command("sweep")
@click.option("--kind", type=click.Choice(sorted(KIND_MAP)), required=True)
@click.option("--grid", required=True, help="comma-separated grid points")
@click.option("--config", "config_path", default=None, help="base load config JSON")
@click.option("--out", "out_dir", required=True, help="output directory for CSV/SVG")
def sweep_cmd(kind, grid, config_path, out_dir):
    """Sweep one parameter across a grid and emit table + plots."""
    base = _load_config(config_path)
    points = [float(p) if kind == "send-rate" else int(p) for p in grid.split(",")]
    results = sweep(KIND_MAP[kind], points, base, out_dir=out_dir)
    for point, report in results:
        line = " ".join(
            f"{fn}:tps={stats.throughput:.1f},lat={stats.latency_mean:.3f}s"
            for fn, stats in sorted(report.per_type.items())
        )
        click.echo(f"{kind}={point} {line}")
