"""Experiment configuration, result rows and output files."""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import os
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

EXPERIMENTS = ("E-LATTICE-LIP", "E-BETHE", "E-IODS", "E-WEAK", "E-METRICS", "E-HAUSDORFF", "E-APPA", "E-APB")

CSV_COLUMNS = ("experiment", "cell", "parameters", "quantity", "measured", "bound", "slack", "asserted", "passed")

DEFAULTS: dict[str, dict] = {
    "E-LATTICE-LIP": {
        "cases": [{"d": 1, "L": 500}, {"d": 2, "L": 20}],
        "eps": [0.5, 0.1, 0.02],
        "seeds": 20,
        "C": 1.0,
        "lemma_margin": 4,
    },
    "E-BETHE": {
        "k": 3, "C": 1.0, "L": 3, "n_max": 24,
        "eps": [0.5, 0.1, 0.02],
        "seeds": 5,
        "family_size": 64,
        "rank_one_trials": 50, "rank_one_M": 5, "rank_one_L": 3,
    },
    "E-IODS": {
        "d": 1, "L": 400, "C": 1.0,
        "eps": [0.1, 0.03, 0.01, 0.003, 0.001],
        "E_min": -2.5, "E_max": 2.5, "E_points": 41,
        "seeds": 3,
        "K_dC": 10.0,
        "free_c0": 0.5,
    },
    "E-WEAK": {
        "cases": [{"d": 1, "L": 500}, {"d": 2, "L": 20}],
        "lambdas": [0.5, 0.25, 0.125],
        "seeds": 5,
        "E_points": 401,
        "decay_slack": 1.25,
    },
    "E-METRICS": {"pairs": 100, "lp_pairs": 100, "triples": 50, "C": 1.0},
    "E-HAUSDORFF": {
        "perturb_trials": 100, "perturb_L": 100,
        "ks_L": 200, "ks_samples": 20,
        "example_n": 4, "example_L": 5000, "example_seeds": 20,
        "band": [95.0, 97.0],
    },
    "E-APPA": {
        "L": [50, 100, 200, 400],
        "V0": 0.5,
        "bethe_k": 3,
        "bethe_L": [4, 5, 6, 7, 8, 9, 10],
        "pieces": 800,
        "slope_max": -0.8,
    },
    "E-APB": {
        "C0": 1.0, "C": 1.0,
        "eps": [0.5, 0.1, 0.02, 0.005],
        "lattice_L": 200,
        "seeds": 3,
        "bethe_k": 3, "bethe_L": 3, "bethe_n_max": 24, "family_size": 48,
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        unknown = set(self.params) - set(DEFAULTS[self.experiment])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.experiment}: {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS[self.experiment])
        merged.update(copy.deepcopy(self.params))
        self.params = merged
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if int(self.threads) < 1:
            raise ConfigError("threads must be >= 1")

    def canonical(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "seed": int(self.seed)}

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def configs_from_dict(data: dict, only: str | None = None) -> list[ExperimentConfig]:
    """A config names one ``experiment`` with ``params``, or maps ``experiments`` to params."""
    seed = int(data.get("seed", 0))
    out = data.get("out")
    threads = int(data.get("threads", 1))
    if "experiments" in data:
        table = data["experiments"]
    elif "experiment" in data:
        table = {data["experiment"]: data.get("params", {})}
    else:
        table = {}
    if only is not None:
        table = {only: table.get(only, {})}
    elif not table:
        table = {e: {} for e in EXPERIMENTS}
    return [ExperimentConfig(e, p or {}, seed, out, threads) for e, p in table.items()]


def resolve_out(cli_out: str | None, cfg_out: str | None) -> str:
    """``--out`` beats ``DOSOM_OUT`` beats the config file beats ``results``."""
    return cli_out or os.environ.get("DOSOM_OUT") or cfg_out or "results"


def cell_seed(base: int, key: str) -> int:
    digest = hashlib.sha256(key.encode()).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return int(np.random.SeedSequence([int(base) % 2**64, *words]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    cell: str
    parameters: str
    quantity: str
    measured: float
    bound: float | None = None
    slack: float = 0.0
    asserted: bool = False
    passed: bool | None = None

    @classmethod
    def check(cls, experiment, cell, parameters, quantity, measured, bound, slack=0.0) -> ResultRow:
        ok = bool(float(measured) <= float(bound) + float(slack))
        return cls(experiment, cell, parameters, quantity, float(measured), float(bound), float(slack), True, ok)

    @classmethod
    def report(cls, experiment, cell, parameters, quantity, measured, bound=None) -> ResultRow:
        return cls(experiment, cell, parameters, quantity, float(measured),
                   None if bound is None else float(bound), 0.0, False, None)

    def csv_fields(self) -> list[str]:
        return [self.experiment, self.cell, self.parameters, self.quantity, _fmt(self.measured),
                "" if self.bound is None else _fmt(self.bound), _fmt(self.slack),
                "1" if self.asserted else "0", "" if self.passed is None else ("1" if self.passed else "0")]


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def params_str(**kw) -> str:
    parts = []
    for k in sorted(kw):
        v = kw[k]
        parts.append(f"{k}={_fmt(v) if isinstance(v, float) else v}")
    return ";".join(parts)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def sidecar(cfg: ExperimentConfig, rows, seeds: dict) -> str:
    from .. import __version__
    asserted = [r for r in rows if r.asserted]
    doc = {
        "experiment": cfg.experiment,
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "cell_seeds": seeds,
        "columns": list(CSV_COLUMNS),
        "rows": len(rows),
        "asserted": len(asserted),
        "failed": sum(1 for r in asserted if not r.passed),
        "versions": {"dosom": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
