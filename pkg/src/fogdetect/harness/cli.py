"""Command-line entry point (``fogdetect``).

Exit codes: 0 success, 1 protocol failure, 2 bad input or configuration,
3 tamper alarm raised during ``simulate``.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import random
import sys
from typing import Sequence

import numpy as np

from .. import packing
from ..protocol import ProtocolError, SizeModel, TamperAlarm, WorldConfig, cc_init
from . import experiments as ex
from .data import IngestSpec, QuantizationError, SyntheticSpec, ingest, ingest_series, split_halves, synthetic_series

EXIT_OK = 0
EXIT_PROTOCOL = 1
EXIT_INVALID = 2
EXIT_TAMPER = 3

log = logging.getLogger("fogdetect")


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    """``"2,5,10"`` or a range ``"1:100"`` / ``"10:100:10"`` (inclusive)."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p]


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError("config must be a JSON object")
    return obj


def _world_config(args, conf: dict) -> WorldConfig:
    cfg = WorldConfig.from_json({k: v for k, v in conf.items() if k not in ("data", "synthetic", "experiment")})
    over = {}
    for name in ("kappa", "curve", "l", "N", "d", "threshold", "allow_unsafe"):
        v = getattr(args, name, None)
        if v is not None and v is not False:
            over[name] = v
    if args.seed is not None:
        over["seed"] = args.seed
    for k, v in over.items():
        setattr(cfg, k, v)
    return cfg


def _series(args, conf: dict, seed: int, l: int | None = None) -> tuple[np.ndarray, int]:
    """Load the CSV named on the command line / in config, else synthesise."""
    data = dict(conf.get("data") or {})
    if getattr(args, "csv", None):
        data["path"] = args.csv
    for name in ("columns", "scale", "offset", "d"):
        v = getattr(args, f"data_{name}", None)
        if v is not None:
            data[name] = v
    if data.get("path"):
        cols = data.get("columns")
        if isinstance(cols, str):
            cols = cols.split(",")
        if not cols:
            raise UsageError("CSV input needs --columns")
        spec = IngestSpec(
            path=data["path"],
            columns=cols,
            d=int(data.get("d", 4095)),
            scale=float(data.get("scale", 1.0)),
            offset=float(data.get("offset", 0.0)),
        )
        return ingest_series(spec), spec.d
    syn_conf = dict(conf.get("synthetic") or {})
    if l is not None:
        syn_conf.setdefault("l", l)
    syn = SyntheticSpec(**syn_conf)
    return synthetic_series(syn, np.random.default_rng(seed)), syn.d


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _seed(args, conf: dict) -> int:
    return args.seed if args.seed is not None else int(conf.get("seed", 0))


def cmd_keygen(args, conf) -> int:
    cfg = _world_config(args, conf)
    params, secrets = cc_init(
        cfg.kappa, cfg.dims, group=cfg.curve, rng=random.Random(cfg.seed), allow_unsafe=cfg.allow_unsafe
    )
    out = {
        "public": params.to_json(),
        "secret": {
            "paillier": secrets.analyzer.sk.to_json(),
            "x_s": hex(secrets.analyzer.x_s.x),
            "x_f": hex(secrets.aggregator.x_f.x),
            "x_u": hex(secrets.sensor.x_u.x),
        },
    }
    with _output(args.out) as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_capacity(args, conf) -> int:
    rows = ex.experiment_capacity(_ints(args.l_range), _ints(args.d_range), _ints(args.bits), strict=args.strict)
    with _output(args.out) as fh:
        ex.write_table(rows, fh)
    return EXIT_OK


def cmd_ingest_check(args, conf) -> int:
    spec = IngestSpec(
        path=args.csv,
        columns=args.data_columns.split(","),
        d=args.data_d if args.data_d is not None else 4095,
        scale=args.data_scale if args.data_scale is not None else 1.0,
        offset=args.data_offset if args.data_offset is not None else 0.0,
        window=args.window,
        stride=args.stride,
    )
    sets = ingest(spec)
    series = ingest_series(spec)
    train, test = split_halves(series)
    report = {
        "rows": int(series.shape[0]),
        "columns": list(spec.columns),
        "min": series.min(axis=0).tolist(),
        "max": series.max(axis=0).tolist(),
        "sets": int(sets.shape[0]),
        "window": spec.window,
        "train_rows": int(train.shape[0]),
        "test_rows": int(test.shape[0]),
    }
    with _output(args.out) as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def _experiment_opts(conf: dict) -> dict:
    e = conf.get("experiment") or {}
    return {"n_sets": int(e.get("sets", ex.DEFAULT_SETS)), "inject_fraction": float(e.get("inject_fraction", 0.2))}


def cmd_train(args, conf) -> int:
    seed = _seed(args, conf)
    series, d = _series(args, conf, seed)
    train, _ = split_halves(series)
    opts = _experiment_opts(conf)
    if args.sets:
        opts["n_sets"] = args.sets
    ths = ex.train_thresholds(train, _floats(args.alpha_sq), args.N, seed, d=d, target_tpr=args.target_tpr, **opts)
    with _output(args.out) as fh:
        ex.write_table(ex.threshold_rows(ths), fh)
    return EXIT_OK


def cmd_evaluate(args, conf) -> int:
    seed = _seed(args, conf)
    series, d = _series(args, conf, seed)
    train, test = split_halves(series)
    opts = _experiment_opts(conf)
    if args.sets:
        opts["n_sets"] = args.sets
    if args.threshold is not None:
        th: float = args.threshold
    elif args.train_alpha_sq is not None:
        th = ex.train_thresholds(train, [args.train_alpha_sq], args.train_N, seed, d=d, **opts)[0].value
    else:
        th = float(conf.get("threshold", 1e7))
    rows = ex.experiment_effectiveness(test, _floats(args.alpha_sq), _ints(args.N_list), th, seed + 1, d=d, **opts)
    with _output(args.out) as fh:
        ex.write_table(rows, fh)
    return EXIT_OK


def cmd_commcost(args, conf) -> int:
    sm = {k: v for k, v in (conf.get("size_model") or {}).items() if k in SizeModel.__dataclass_fields__}
    rows = ex.experiment_commcost(_ints(args.N_range), SizeModel(**sm))
    with _output(args.out) as fh:
        ex.write_table(rows, fh)
    return EXIT_OK


def cmd_simulate(args, conf) -> int:
    cfg = _world_config(args, conf)
    series, _ = _series(args, conf, cfg.seed, l=cfg.l)
    if series.shape[1] != cfg.l:
        raise UsageError(f"data has {series.shape[1]} columns but l={cfg.l}")
    with contextlib.ExitStack() as stack:
        traces = stack.enter_context(open(args.trace, "w")) if args.trace else None
        summary = ex.simulate(cfg, series, args.rounds, traces=traces, offset=not args.no_offset)
    with _output(args.out) as fh:
        json.dump(summary.to_json(include_timing=not args.no_timing), fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fogdetect", description="Privacy-preserving faulty sensor detection toolkit")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="RNG seed (u64)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def world_opts(sp):
        sp.add_argument("--kappa", type=int, help="Paillier prime size in bits")
        sp.add_argument("--curve", choices=["bls12-381", "toy"])
        sp.add_argument("--l", type=int)
        sp.add_argument("--N", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--allow-unsafe", action="store_true", help="permit kappa < 1024 (tests only)")

    def data_opts(sp):
        sp.add_argument("--csv", help="CSV input; omit to use the synthetic generator")
        sp.add_argument("--columns", dest="data_columns", help="comma-separated column names")
        sp.add_argument("--scale", dest="data_scale", type=float)
        sp.add_argument("--offset", dest="data_offset", type=float)
        sp.add_argument("--data-d", dest="data_d", type=int, help="quantisation range [0, d]")

    sp = sub.add_parser("keygen", help="bootstrap keys and public parameters")
    world_opts(sp)
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("capacity", help="N_max table over (l, d, bits)")
    sp.add_argument("--l", dest="l_range", default="1:10")
    sp.add_argument("--d", dest="d_range", default="255,1023,4095,65535")
    sp.add_argument("--bits", default="2048,4096")
    sp.add_argument("--strict", action="store_true", help="bound by 2^(bits-1) instead of 2^bits - 1")
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("ingest-check", help="validate quantisation and windowing of a CSV")
    data_opts(sp)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--stride", type=int)
    sp.set_defaults(func=cmd_ingest_check)

    sp = sub.add_parser("train", help="train thresholds on the first half of the data")
    data_opts(sp)
    sp.add_argument("--alpha-sq", default="0.01,0.05,0.1")
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--sets", type=int)
    sp.add_argument("--target-tpr", type=float, default=0.95)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="TPR/FPR table on the second half of the data")
    data_opts(sp)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--train-alpha-sq", type=float, help="train Th at this alpha^2 instead of --threshold")
    sp.add_argument("--train-N", type=int, default=10)
    sp.add_argument("--alpha-sq", default="0.04,0.045,0.05,0.055,0.06")
    sp.add_argument("--N", dest="N_list", default="10,15,20,25")
    sp.add_argument("--sets", type=int)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("commcost", help="communication overhead versus N")
    sp.add_argument("--N", dest="N_range", default="1:100")
    sp.set_defaults(func=cmd_commcost)

    sp = sub.add_parser("simulate", help="run detection rounds through all four entities")
    world_opts(sp)
    data_opts(sp)
    sp.add_argument("--rounds", type=int, default=10)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--trace", help="write per-message JSONL trace here")
    sp.add_argument("--no-offset", action="store_true", help="disable the aggregator offset (demonstrates the alarm)")
    sp.add_argument("--no-timing", action="store_true", help="omit wall-clock fields from the summary")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        conf = _load_config(args.config)
        return args.func(args, conf)
    except TamperAlarm as exc:
        print(f"tamper alarm: {exc}", file=sys.stderr)
        return EXIT_TAMPER
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (UsageError, QuantizationError, packing.PackingError, ValueError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
