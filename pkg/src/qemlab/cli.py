"""``qem-lab`` command line entry point."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, NOISE_MODELS, ExperimentConfig, run_experiment

MODE_ALIASES = {
    "noqem": "noqem",
    "exact": "exact_qem",
    "exact_qem": "exact_qem",
    "mc-emp": "mc_empirical",
    "mc_empirical": "mc_empirical",
    "mc-concat": "mc_concat",
    "mc_concat": "mc_concat",
}


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"1..1000"``, ``"10..100:10"`` or ``"9,25,49"``; pieces may be mixed with commas."""
    out: list[int] = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if ".." in piece:
            span, _, step = piece.partition(":")
            lo, hi = span.split("..")
            lo, hi, step = int(lo), int(hi), int(step or 1)
            if step < 1 or hi < lo:
                raise argparse.ArgumentTypeError(f"bad range {piece!r}")
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(piece))
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return tuple(out)


def parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_modes(text: str) -> tuple[str, ...]:
    modes = []
    for name in text.split(","):
        name = name.strip()
        if name not in MODE_ALIASES:
            raise argparse.ArgumentTypeError(f"unknown mode {name!r}; choose from {sorted(MODE_ALIASES)}")
        if MODE_ALIASES[name] not in modes:
            modes.append(MODE_ALIASES[name])
    return tuple(modes)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qem-lab",
        description="Quasi-probability error mitigation experiments (CSV + manifest output).",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-list", type=parse_float_list, dest="eps_list")
    p.add_argument("--gamma", type=float)
    p.add_argument("--theta", type=float, help="rotation angle in radians")
    p.add_argument("--ns", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ng", type=parse_int_list, dest="ng_list", help="e.g. 1..1000, 10..100:10, 5,10,20")
    p.add_argument("--stages", type=parse_int_list, dest="p_list", help="e.g. 9,25,49,81")
    p.add_argument("--traj-stages", type=int, dest="traj_p", help="stage count for the trajectory table")
    p.add_argument("--modes", type=parse_modes, help="subset of noqem,exact,mc-emp,mc-concat")
    p.add_argument("--noise-model", choices=NOISE_MODELS, dest="noise_model")
    p.add_argument("--workers", type=int, help="thread count (default QEM_LAB_THREADS or all cores)")
    p.add_argument("--out", dest="out_path", default=None, help="output directory")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
        if "modes" in values:
            values["modes"] = parse_modes(",".join(values["modes"]))
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        values[key] = value
    values["experiment"] = args.experiment
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))
    tables, manifest = run_experiment(cfg)
    for name, table in tables.items():
        print(f"{name}: {len(table.rows)} rows, columns {', '.join(table.columns)}")
    if manifest["summary"]:
        print(json.dumps(manifest["summary"], indent=2, sort_keys=True))
    if cfg.out_path:
        print(f"wrote {len(tables)} CSV file(s) and manifest.json to {cfg.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
