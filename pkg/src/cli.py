"""Command-line front-end.

    python -m src.cli simulate --config paired_realizations --seed 7
    python -m src.cli ensemble --config dephaser_ensemble --jobs 8
    python -m src.cli entropy-sweep --config coherence_sweep
    python -m src.cli classify data/runs/ensemble-dephaser_ensemble/ensemble
    python -m src.cli pair --config paired_realizations
    python -m src.cli entropy-report --config entropy_stages

Exit codes: 0 ok, 2 configuration, 3 storage, 4 degenerate input, 5 numerical validity.
"""
import argparse
import os
import pathlib
import sys
import time
from dataclasses import replace
from typing import Callable, Dict, List, Optional

import pandas as pd

if __package__ is None or __package__ == "":
    sys.path.append(str(pathlib.Path(__file__).resolve().parents[1]))

from src import presets
from src.correlation import analyze, ensemble_mean
from src.density import entropy_sweep
from src.ensemble import (
    derive_seed,
    entropy_report,
    load_ensemble,
    load_ensemble_config,
    mode_master,
    pair_visibility,
    run_ensemble,
    run_pair,
    run_realization,
    save_ensemble,
    slit_field,
)
from src.errors import ConfigError, FringelabError, StorageError
from src.experiment_config import ExperimentConfig, load_config
from src.utils_io import RUNS, output_lock, utc_now_str, write_csv, write_json

JOBS_ENV = "FRINGELAB_JOBS"


def resolve_jobs(value: Optional[int]) -> int:
    if value is None:
        raw = os.environ.get(JOBS_ENV, "").strip()
        if not raw:
            return 1
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"{JOBS_ENV} must be an integer, got {raw!r}") from e
    if value == 0 or value < -1:
        raise ConfigError(f"--jobs must be a positive integer or -1, got {value}")
    return value


def _seed(cfg: ExperimentConfig, seed: Optional[int]) -> int:
    """Explicit seed, else the seed of realization 0."""
    if seed is None:
        return derive_seed(mode_master(cfg), 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return seed


def _pattern_frame(pattern, column: str = "intensity") -> pd.DataFrame:
    return pd.DataFrame({"x_m": pattern.grid.points, column: pattern.values})


def cmd_simulate(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    seed = _seed(cfg, args.seed)
    rec = run_realization(cfg, seed)
    files = [write_csv(_pattern_frame(rec.pattern), out / "pattern.csv")]
    if cfg.mode == "decoherer":
        payload = {"seed": rec.seed, "mode": cfg.mode, "entropy_slit_plane_nats": rec.entropy_slit_plane}
        files.append(write_json(payload, out / "entropy.json"))
    print(f"Simulated {cfg.mode} realization with seed {seed}.")
    return files


def cmd_ensemble(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    jobs = resolve_jobs(args.jobs)
    e = run_ensemble(cfg, n_jobs=jobs, progress=cfg.n_realizations > 1 and sys.stderr.isatty())
    ens_dir = save_ensemble(e, out / "ensemble", cfg)
    files = [ens_dir / "manifest.json", ens_dir / "patterns.csv"]
    print(f"Saved ensemble of {e.size} realizations to {ens_dir}")
    files.append(write_csv(_pattern_frame(ensemble_mean(e)), out / "mean_pattern.csv"))
    result = analyze(e, cfg.optical, cfg.classifier)
    files.append(write_csv(result.to_frame(), out / "delta_g2.csv"))
    files.append(write_json(result.summary(e.size, e.config_digest), out / "summary.json"))
    print(f"Verdict: {result.verdict.value} (pearson_r={result.pearson_r:.4f}, fringe_power_ratio={result.fringe_power_ratio:.4f})")
    return files


def cmd_entropy_sweep(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    psi = slit_field(cfg)
    w = cfg.sweep.w_values
    window = cfg.decoherer.window
    curve = pd.concat(
        [
            entropy_sweep(cfg.optical, "gaussian", w, slit_field=psi, window=window, include_shannon=False),
            entropy_sweep(cfg.optical, "tophat", w, slit_field=psi, window=window),
        ],
        ignore_index=True,
    )
    print(f"Computed entropy for {len(w)} coherence lengths.")
    return [write_csv(curve, out / "entropy_curve.csv")]


def cmd_classify(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    e = load_ensemble(args.ensemble_dir)
    result = analyze(e, cfg.optical, cfg.classifier)
    files = [
        write_csv(result.to_frame(), out / "delta_g2.csv"),
        write_json(result.summary(e.size, e.config_digest), out / "summary.json"),
    ]
    print(f"Verdict: {result.verdict.value} for {e.size} realizations in {args.ensemble_dir}")
    return files


def cmd_pair(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    seed = _seed(cfg, args.seed)
    pair = run_pair(cfg, seed)
    dephased, decohered = pair
    frame = pd.DataFrame(
        {"x_m": dephased.pattern.grid.points, "dephaser": dephased.pattern.values, "decoherer": decohered.pattern.values}
    )
    vis = pair_visibility(cfg, pair)
    print(f"Visibility with seed {seed}: dephaser {vis['dephaser']:.3f}, decoherer {vis['decoherer']:.3f}")
    return [write_csv(frame, out / "pattern_pair.csv"), write_json(vis, out / "visibility.json")]


def cmd_entropy_report(cfg: ExperimentConfig, args, out: pathlib.Path) -> List[pathlib.Path]:
    report = entropy_report(cfg, _seed(cfg, args.seed))
    print(
        f"Entropy (nats): before {report['before']:.3g}, after dephaser {report['after_dephaser']:.3g}, "
        f"after decoherer {report['after_decoherer']:.4f}"
    )
    return [write_json(report, out / "entropy_report.json")]


COMMANDS: Dict[str, Callable] = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "entropy-sweep": cmd_entropy_sweep,
    "classify": cmd_classify,
    "pair": cmd_pair,
    "entropy-report": cmd_entropy_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Config file or preset name (default: config.yml)")
    common.add_argument("--seed", type=int, default=None, help="Realization seed (ensemble: master seed)")
    common.add_argument("--out", type=pathlib.Path, default=None, help="Output directory (default: data/runs/<command>-<config>)")
    common.add_argument("--jobs", type=int, default=None, help=f"Parallel workers (fallback: ${JOBS_ENV}, else 1)")

    p = argparse.ArgumentParser(prog="fringelab", description="Double-slit dephasing/decoherence experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="One realization -> pattern.csv")
    sub.add_parser("ensemble", parents=[common], help="Ensemble, delta g2 and verdict")
    sub.add_parser("entropy-sweep", parents=[common], help="Entropy vs coherence length -> entropy_curve.csv")
    c = sub.add_parser("classify", parents=[common], help="Re-run the correlation analysis on a stored ensemble")
    c.add_argument("ensemble_dir", type=pathlib.Path)
    sub.add_parser("pair", parents=[common], help="Seed-paired dephaser/decoherer patterns")
    sub.add_parser("entropy-report", parents=[common], help="Entropy before and after each disturbance")
    return p


def _prepare(args) -> tuple[ExperimentConfig, pathlib.Path, str]:
    """Config and output directory; nothing touches the filesystem yet."""
    if args.command == "classify":
        stored = load_ensemble_config(args.ensemble_dir) if args.config is None else None
        if stored is not None:
            return stored, args.out or args.ensemble_dir, str(args.ensemble_dir / "manifest.json")
    path = presets.resolve(args.config)
    cfg = load_config(path)
    if args.command == "classify":
        return cfg, args.out or args.ensemble_dir, str(path)
    return cfg, args.out or RUNS / f"{args.command}-{path.stem}", str(path)


def run(args) -> List[pathlib.Path]:
    started = time.perf_counter()
    cfg, out, config_source = _prepare(args)
    with output_lock(out):
        files = COMMANDS[args.command](cfg, args, out)
        missing = [f for f in files if not f.exists()]
        if missing:
            raise StorageError(f"expected output files missing: {', '.join(map(str, missing))}")
        manifest = {
            "command": args.command,
            "config": config_source,
            "output": str(out),
            "files": sorted(str(f.relative_to(out)) for f in files),
            "config_digest": cfg.digest,
            "wall_time_s": round(time.perf_counter() - started, 3),
            "finished": utc_now_str(),
        }
        write_json(manifest, out / "run_manifest.json")
    return files


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except FringelabError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return StorageError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
