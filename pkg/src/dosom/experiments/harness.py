"""Cell scheduling, deterministic merge and output files."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import ExperimentConfig, cell_seed, rows_to_csv, sidecar
from .runners import RUNNERS


@dataclass
class RunResult:
    config: ExperimentConfig
    rows: list
    seeds: dict
    timings: dict

    @property
    def failed(self) -> list:
        return [r for r in self.rows if r.asserted and not r.passed]


def _work(args):
    experiment, params, key, payload, seed = args
    _, run_cell, _ = RUNNERS[experiment]
    t0 = time.perf_counter()
    rows = run_cell(params, key, payload, seed)
    return key, rows, time.perf_counter() - t0


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> RunResult:
    """Run every cell of ``cfg``; rows are merged by sorted cell key, so output ignores scheduling."""
    cells_fn, _, finalize = RUNNERS[cfg.experiment]
    cells = cells_fn(cfg.params)
    keys = [k for k, _ in cells]
    if len(set(keys)) != len(keys):
        raise RuntimeError(f"duplicate cell keys in {cfg.experiment}")
    seeds = {k: cell_seed(cfg.seed, f"{cfg.experiment}|{k}") for k in keys}
    jobs = [(cfg.experiment, cfg.params, k, p, seeds[k]) for k, p in cells]
    threads = int(threads or cfg.threads)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_work, jobs))
    else:
        results = [_work(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    rows = [row for _, rs, _ in results for row in rs]
    if finalize is not None:
        rows += finalize(cfg.params, rows)
    return RunResult(cfg, rows, dict(sorted(seeds.items())), {k: t for k, _, t in results})


def write_outputs(result: RunResult, out_dir: str) -> dict:
    """``<exp>.csv`` and ``<exp>.json`` are deterministic; runtimes go to ``<exp>.timing.csv``."""
    os.makedirs(out_dir, exist_ok=True)
    name = result.config.experiment
    paths = {
        "csv": os.path.join(out_dir, f"{name}.csv"),
        "json": os.path.join(out_dir, f"{name}.json"),
        "timing": os.path.join(out_dir, f"{name}.timing.csv"),
    }
    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(result.rows))
    with open(paths["json"], "w", encoding="utf-8") as fh:
        fh.write(sidecar(result.config, result.rows, result.seeds))
    with open(paths["timing"], "w", encoding="utf-8") as fh:
        fh.write("cell,seconds\n")
        for k in sorted(result.timings):
            fh.write(f"{k},{result.timings[k]:.3f}\n")
    return paths
