"""Command-line entry point: run a sweep and write the two CSV reports.

Configuration comes from built-in defaults, overridden by an optional flat
``key = value`` config file, overridden by command-line flags. The accepted
keys (file and flags use the same names, flags spelled with dashes)::

    antennas      = 2              # transmit antennas
    group_sizes   = 1,2,3          # multicast group sizes
    schemes       = SC,CC,MC       # subset of SC, CC, MC
    modes         = RS,NoRS        # subset of RS, NoRS
    snr_db        = 0,5,10,15,20,25,30
    rc_threshold  = 0.0            # broadcast-rate floor (bits)
    realizations  = 100
    seed          = 0              # master seed
    alpha_grid    = 0.05,0.1,...   # SC/MC power-split candidates
    epsilon       = 1e-4           # alternating-loop stop threshold
    max_iters     = 500
    init          = seeded-random  # or matched-filter
    n_jobs        = 1              # parallel workers (-1: all cores)
    out_dir       = results

Lines starting with ``#`` and inline ``# ...`` trailers are comments.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import ao, harness
from .validation import as_init_strategy, as_mode, as_scheme

_DEFAULTS = {
    "antennas": "2",
    "group_sizes": "1,2,3",
    "schemes": "SC,CC,MC",
    "modes": "RS,NoRS",
    "snr_db": "0,5,10,15,20,25,30",
    "rc_threshold": "0.0",
    "realizations": "100",
    "seed": "0",
    "alpha_grid": ",".join(str(a) for a in ao.DEFAULT_ALPHA_GRID),
    "epsilon": "1e-4",
    "max_iters": "500",
    "init": "seeded-random",
    "n_jobs": "1",
    "out_dir": "results",
}


def load_config_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` config file (see module docstring)."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _split_list(text: str) -> list[str]:
    return [tok for tok in text.replace(",", " ").split() if tok]


def build_experiment_config(values: dict[str, str]) -> harness.ExperimentConfig:
    ao_config = ao.AoConfig(
        epsilon=float(values["epsilon"]),
        max_iters=int(values["max_iters"]),
        init_strategy=as_init_strategy(values["init"]),
        alpha_grid=tuple(float(a) for a in _split_list(values["alpha_grid"])),
    )
    return harness.ExperimentConfig(
        n_antennas=int(values["antennas"]),
        group_sizes=tuple(int(g) for g in _split_list(values["group_sizes"])),
        schemes=tuple(as_scheme(s) for s in _split_list(values["schemes"])),
        modes=tuple(as_mode(m) for m in _split_list(values["modes"])),
        snr_grid_db=tuple(float(s) for s in _split_list(values["snr_db"])),
        rc_threshold=float(values["rc_threshold"]),
        realizations=int(values["realizations"]),
        master_seed=int(values["seed"]),
        ao=ao_config,
        n_jobs=int(values["n_jobs"]),
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsmcast",
        description="Max-min fair multicast precoding sweeps with rate splitting.",
    )
    parser.add_argument("--config", metavar="FILE", help="flat key=value config file")
    parser.add_argument("--antennas", type=int, help="transmit antennas")
    parser.add_argument("--groups", dest="group_sizes", metavar="SIZES",
                        help="comma-separated group sizes, e.g. 1,2,3")
    parser.add_argument("--scheme", dest="schemes", metavar="LIST",
                        help="schemes to run (subset of SC,CC,MC)")
    parser.add_argument("--mode", dest="modes", metavar="LIST",
                        help="modes to run (subset of RS,NoRS)")
    parser.add_argument("--snr", dest="snr_db", metavar="LIST",
                        help="SNR grid in dB, e.g. 0,10,20,30")
    parser.add_argument("--rc-th", dest="rc_threshold", type=float,
                        help="broadcast-rate floor in bits")
    parser.add_argument("--realizations", type=int, help="channel realizations")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--alpha-grid", dest="alpha_grid", metavar="LIST",
                        help="power-split candidates for SC/MC")
    parser.add_argument("--epsilon", type=float, help="alternating-loop stop threshold")
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--init", help="seeded-random or matched-filter")
    parser.add_argument("--n-jobs", dest="n_jobs", type=int, help="parallel workers")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    values = dict(_DEFAULTS)
    if args.config:
        values.update(load_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)

    config = build_experiment_config(values)
    rows = harness.run_experiment(config)
    aggregates = harness.aggregate(rows)
    raw_path, agg_path = harness.emit_csv(rows, aggregates, values["out_dir"])

    n_infeasible = sum(a.n_infeasible for a in aggregates)
    print(f"wrote {raw_path} ({len(rows)} rows) and {agg_path}")
    if n_infeasible:
        print(f"{n_infeasible} infeasible runs excluded from curve means")
    for a in aggregates:
        mean = "n/a" if a.mean_mmf_rate is None else f"{a.mean_mmf_rate:.4f}"
        print(f"{a.scheme.value:>2}-{a.mode.value:<4} @ {a.snr_db:g} dB: "
              f"mean mmf rate {mean} bits (n_ok={a.n_ok})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
