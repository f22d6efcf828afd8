"""``dosom`` command line.

Exit codes: 0 when every asserted row passes, 1 when any assertion fails,
2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import dos
from ..approx import LipschitzTestFunction
from ..graphs import BallTooLargeError, GraphFamily, build_ball, write_edgelist
from ..measures import DiscreteMeasure, d_inf, d_krw, d_w, hausdorff
from ..potentials import SingleSiteMeasure, read_potential_csv, sample_random_potential
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, configs_from_dict, load_config_file, resolve_out
from .harness import run_experiment, write_outputs

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory (overrides DOSOM_OUT and the config)")
    common.add_argument("--seed", type=_u64, help="base seed (unsigned 64-bit)")
    common.add_argument("--threads", type=_positive, help="worker processes")
    common.add_argument("--single-thread", action="store_true", help="run cells inline, in order")

    p = argparse.ArgumentParser(prog="dosom", description="Density-of-states experiments on lattices and trees.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("ball", parents=[common], help="build a rooted ball and print its level counts")
    b.add_argument("family", help="Z1, Z2, bethe3, hex, tri, ...")
    b.add_argument("radius", type=int)
    b.add_argument("--edgelist", help="also write the edge list to this path")

    d = sub.add_parser("dos", parents=[common], help="evaluate a finite-volume DOS functional")
    d.add_argument("family")
    d.add_argument("L", type=int)
    d.add_argument("--backend", choices=dos.BACKENDS, default=dos.FINITE_VOLUME)
    d.add_argument("--M", type=int, help="ambient radius (default depends on backend)")
    d.add_argument("--n-max", type=int, default=32)
    d.add_argument("--potential", default="uniform:1",
                   help="'zero', 'uniform:C' (i.i.d. U[-C,C]) or a CSV path")
    d.add_argument("--f", default="hat:0:1", help="'one', 'hat:center:half_width' or 'ids:E'")

    m = sub.add_parser("metric", parents=[common], help="distance between two measures stored as JSON")
    m.add_argument("first")
    m.add_argument("second")
    m.add_argument("--metric", choices=("d_w", "d_krw", "d_inf", "hausdorff"), default="d_w")

    e = sub.add_parser("experiment", parents=[common], help="run one verification experiment")
    e.add_argument("id", choices=EXPERIMENTS)

    sub.add_parser("all", parents=[common], help="run every verification experiment")
    return p


def _potential(text: str, g, seed: int) -> np.ndarray:
    if text == "zero":
        return np.zeros(g.vertex_count)
    if text.startswith("uniform:"):
        C = float(text.split(":", 1)[1])
        return sample_random_potential(g, SingleSiteMeasure.uniform(-C, C), seed)
    V = read_potential_csv(text)
    if V.size < g.vertex_count:
        raise ConfigError(f"potential file has {V.size} values, ball needs {g.vertex_count}")
    return V[: g.vertex_count]


def _test_function(text: str):
    parts = text.split(":")
    if parts[0] == "one":
        return LipschitzTestFunction.constant(1.0)
    if parts[0] == "hat" and len(parts) == 3:
        return LipschitzTestFunction.hat(float(parts[1]), float(parts[2]))
    if parts[0] == "ids" and len(parts) == 2:
        E = float(parts[1])
        return lambda x: (np.asarray(x) <= E).astype(float)
    raise ConfigError(f"cannot parse test function {text!r}")


def _load_measure(path: str) -> DiscreteMeasure:
    if path.endswith(".csv"):
        return DiscreteMeasure.from_csv(path)
    with open(path, encoding="utf-8") as fh:
        return DiscreteMeasure.from_dict(json.load(fh))


def _cmd_ball(a) -> int:
    g = build_ball(GraphFamily.parse(a.family), a.radius)
    counts = [g.count_within(L) for L in range(a.radius + 1)]
    print(json.dumps({"family": g.family.label, "radius": a.radius, "vertices": g.vertex_count,
                      "count_within": counts}))
    if a.edgelist:
        write_edgelist(g, a.edgelist)
    return EXIT_OK


def _cmd_dos(a) -> int:
    fam = GraphFamily.parse(a.family)
    if a.M is not None:
        M = a.M
    elif a.backend == dos.MOMENT_EXACT:
        M = dos.moment_radius(a.L, a.n_max)
    elif a.backend == dos.AMBIENT:
        M = 2 * a.L
    else:
        M = a.L
    g = build_ball(fam, M)
    seed = a.seed if a.seed is not None else 0
    V = _potential(a.potential, g, seed)
    est = dos.dos_value(g, V, a.L, _test_function(a.f), a.backend, n_max=a.n_max)
    est.seed = seed
    est.measure = None
    print(est.to_json())
    return EXIT_OK


def _cmd_metric(a) -> int:
    m1, m2 = _load_measure(a.first), _load_measure(a.second)
    if a.metric == "hausdorff":
        print(json.dumps({"value": hausdorff(m1.positions, m2.positions), "method": "hausdorff"}))
        return EXIT_OK
    fn = {"d_w": d_w, "d_krw": d_krw, "d_inf": d_inf}[a.metric]
    print(json.dumps(fn(m1, m2).to_dict(), sort_keys=True))
    return EXIT_OK


def _experiment_configs(a, only) -> list[ExperimentConfig]:
    data = load_config_file(a.config) if a.config else {}
    if a.seed is not None:
        data["seed"] = a.seed
    cfgs = configs_from_dict(data, only)
    for c in cfgs:
        if a.single_thread:
            c.threads = 1
        elif a.threads is not None:
            c.threads = a.threads
    return cfgs


def _cmd_experiments(a, only) -> int:
    cfgs = _experiment_configs(a, only)
    status = EXIT_OK
    for cfg in cfgs:
        out = resolve_out(a.out, cfg.out)
        res = run_experiment(cfg)
        paths = write_outputs(res, out)
        n_assert = sum(1 for r in res.rows if r.asserted)
        print(f"{cfg.experiment}: {n_assert - len(res.failed)}/{n_assert} assertions passed -> {paths['csv']}")
        for r in res.failed:
            print(f"  FAIL {r.cell} {r.quantity}: measured={r.measured:.6g} bound={r.bound:.6g} slack={r.slack:.3g}")
        if res.failed:
            status = EXIT_FAIL
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    # bad inputs to the small commands surface as ValueError; experiments only as ConfigError
    usage_errors = (ConfigError, BallTooLargeError, OSError)
    try:
        if a.command in ("ball", "dos", "metric"):
            try:
                return {"ball": _cmd_ball, "dos": _cmd_dos, "metric": _cmd_metric}[a.command](a)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return _cmd_experiments(a, a.id if a.command == "experiment" else None)
    except usage_errors as exc:
        print(f"dosom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
