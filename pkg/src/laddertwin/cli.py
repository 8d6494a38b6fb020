"""Command-line front end.

Subcommands: ``estimate``, ``simulate``, ``verify``, ``graph``.

Exit codes: 0 success, 1 configuration/input error, 2 partial batch failure,
3 verification tolerance exceeded.

A config file (``--config``) holds ``key = value`` lines; ``#`` starts a
comment. Keys are the long flag names with dashes or underscores, plus
``inputs`` (comma- or newline-separated paths). Flags override the file.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .errors import LadderTwinError, SingularStructure, UnstableModel
from .ladder import (
    LadderGraph,
    build_ladder,
    detect_feedback_loops,
    detect_structural_cycles,
    detect_x_patterns,
    generate_propositions,
)
from .model import CausalFactors, EstimationConfig, Hyperparameters, MultiChannelSeries
from .pipeline import estimate, ols_oracle, standardize, unpack_factors
from .render import render_dot, render_svg
from .statespace import state_layout
from .synth import SynthSpec, simulate, stability_check

log = logging.getLogger("laddertwin")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_TOLERANCE = 0, 1, 2, 3
EMIT_CHOICES = ("factors-json", "svg", "dot", "propositions", "loops")

# config-file key -> argparse dest
_CONFIG_KEYS = {
    "lag_order": int, "threshold": float, "tail_window": int, "standardize": bool,
    "process_noise": float, "measurement_noise": float, "init_variance": float,
    "alpha": float, "beta": float, "gamma": float, "delta": float, "epsilon": float,
    "seed": int, "out_dir": str, "emit": str, "inputs": str, "tolerance": float,
    "max_loop_edges": int, "max_hops": int, "jobs": int,
}


class ConfigError(Exception):
    pass


def _read_config(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text()
        parser.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for raw_key, raw in parser["run"].items():
        key = raw_key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown key {raw_key!r}")
        kind = _CONFIG_KEYS[key]
        try:
            out[key] = parser["run"].getboolean(raw_key) if kind is bool else kind(raw.strip())
        except ValueError:
            raise ConfigError(f"{path}: bad value for {raw_key!r}: {raw!r}") from None
    return out


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file."""
    if getattr(args, "config", None):
        for key, value in _read_config(args.config).items():
            if key == "standardize":
                if args.no_standardize is None:
                    args.no_standardize = not value
            elif key == "inputs":
                if hasattr(args, "inputs") and not args.inputs:
                    args.inputs = [p.strip() for p in value.replace("\n", ",").split(",") if p.strip()]
            elif hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, value)
    return args


def _config_from(args: argparse.Namespace, hyper_defaults: dict | None = None) -> EstimationConfig:
    base = Hyperparameters(**(hyper_defaults or {}))
    picks = {
        "alpha": args.alpha, "beta": args.beta, "gamma": args.gamma,
        "delta": args.delta, "epsilon": args.epsilon,
        "process_noise_variance": args.process_noise,
        "measurement_noise_variance": args.measurement_noise,
        "initial_state_variance": args.init_variance,
    }
    hyper_kw = {k: getattr(base, k) if v is None else v for k, v in picks.items()}
    try:
        return EstimationConfig(
            lag_order=args.lag_order if args.lag_order is not None else 1,
            hyper=Hyperparameters(**hyper_kw),
            tail_window=args.tail_window if args.tail_window is not None else 5000,
            threshold=args.threshold if args.threshold is not None else 0.1,
            standardize=not args.no_standardize,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--lag-order", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--tail-window", type=int)
    p.add_argument("--no-standardize", action="store_const", const=True, default=None)
    p.add_argument("--process-noise", type=float)
    p.add_argument("--measurement-noise", type=float)
    p.add_argument("--init-variance", type=float)
    for name in ("alpha", "beta", "gamma", "delta", "epsilon"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--emit", help=f"comma list from {','.join(EMIT_CHOICES)} (default: all)")


def _parse_emit(value: str | None) -> set[str]:
    if not value:
        return set(EMIT_CHOICES)
    emit = {v.strip() for v in value.split(",") if v.strip()}
    unknown = emit - set(EMIT_CHOICES)
    if unknown:
        raise ConfigError(f"unknown --emit values: {sorted(unknown)}")
    return emit


# -- reports ---------------------------------------------------------------

def proposition_report(g: LadderGraph, max_hops: int = 2) -> str:
    names = g.channels
    lines = []
    for p in generate_propositions(g, max_hops):
        line = f"{p.text(names)}\tstrength={p.strength:+.6g}\tpath={' ; '.join(p.steps(names))}"
        if p.conflict:
            line += "\tconflict"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def loop_report(g: LadderGraph, max_edges: int = 6) -> str:
    names = g.channels
    xs = detect_x_patterns(g)
    cycles = detect_structural_cycles(g)
    loops = detect_feedback_loops(g, max_edges)
    out = ["# x-patterns"]
    out += [f"{names[i]} <-> {names[j]}" for i, j in xs]
    out.append("# structural-cycles")
    out += [" -> ".join(names[c] for c in cyc + [cyc[0]]) for cyc in cycles]
    out.append("# feedback-loops")
    out += [lp.describe(names) for lp in loops]
    return "\n".join(out) + "\n"


def write_graph_outputs(g: LadderGraph, out_dir: Path, stem: str, emit: set[str],
                        max_edges: int = 6, max_hops: int = 2) -> list[Path]:
    written = []

    def put(suffix: str, text: str):
        path = out_dir / f"{stem}{suffix}"
        path.write_text(text)
        written.append(path)

    if "svg" in emit:
        put(".ladder.svg", render_svg(g, detect_feedback_loops(g, max_edges)))
    if "dot" in emit:
        put(".ladder.dot", render_dot(g))
    if "propositions" in emit:
        put(".propositions.txt", proposition_report(g, max_hops))
    if "loops" in emit:
        put(".loops.txt", loop_report(g, max_edges))
    return written


# -- estimate --------------------------------------------------------------

@dataclass
class RunManifest:
    inputs: list[Path]
    config: EstimationConfig
    outputs: Path
    emit: set[str] = field(default_factory=lambda: set(EMIT_CHOICES))


def _expand_inputs(paths: Sequence[str]) -> list[Path]:
    out = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(c for c in p.iterdir() if c.is_file() and not c.name.startswith(".")))
        elif p.is_file():
            out.append(p)
        else:
            raise ConfigError(f"input not found: {raw}")
    if not out:
        raise ConfigError("no input files")
    return out


def _estimate_one(path: Path, manifest: RunManifest) -> tuple[str, dict | None, str | None]:
    try:
        series = io.read_series(path)
        result = estimate(series, manifest.config)
    except (LadderTwinError, OSError) as exc:
        return str(path), None, f"{type(exc).__name__}: {exc}"
    stem = path.stem
    if "factors-json" in manifest.emit:
        io.write_factors_json(result, manifest.outputs / f"{stem}.factors.json")
    g = build_ladder(result.factors)
    write_graph_outputs(g, manifest.outputs, stem, manifest.emit)
    summary = {"samples": series.n_samples, **g.counts(), "x": len(detect_x_patterns(g))}
    return str(path), summary, None


def cmd_estimate(args: argparse.Namespace) -> int:
    try:
        args = _resolve(args)
        manifest = RunManifest(
            inputs=_expand_inputs(args.inputs or []),
            config=_config_from(args),
            outputs=Path(args.out_dir or "."),
            emit=_parse_emit(args.emit),
        )
        manifest.outputs.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    jobs = args.jobs or 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_estimate_one, manifest.inputs, [manifest] * len(manifest.inputs)))
    else:
        results = [_estimate_one(p, manifest) for p in manifest.inputs]

    failures = 0
    print(f"{'file':<40} {'samples':>8} {'SNL':>4} {'INL':>4} {'INS':>4} {'X':>3}")
    for path, summary, error in results:
        if error:
            failures += 1
            print(f"{path:<40} FAILED {error}")
            print(f"error: {path}: {error}", file=sys.stderr)
        else:
            print(f"{path:<40} {summary['samples']:>8} {summary['SNL']:>4} {summary['INL']:>4} "
                  f"{summary['INS']:>4} {summary['x']:>3}")
    return EXIT_PARTIAL if failures else EXIT_OK


# -- simulate --------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        factors = io.read_factors_json(args.factors)
        noise = [float(v) for v in args.noise.split(",")]
        if len(noise) not in (1, factors.n_channels):
            raise ConfigError(f"--noise needs 1 or {factors.n_channels} values")
    except (LadderTwinError, OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        radius = stability_check(factors)
        print(f"spectral radius: {radius:.6g}")
        spec = SynthSpec(factors, noise if len(noise) > 1 else noise[0], args.length,
                         args.seed if args.seed is not None else 0, args.burn_in,
                         sample_interval=args.sample_interval)
        series = simulate(spec)
    except (UnstableModel, SingularStructure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or ("csv" if Path(args.out).suffix.lower() == ".csv" else "ims")
    if fmt == "csv":
        io.write_csv(series, args.out)
    else:
        io.write_ims_file(series, args.out)
    print(f"wrote {series.n_samples} x {series.n_channels} samples to {args.out}")
    return EXIT_OK


# -- verify ----------------------------------------------------------------

# verify compares against batch least squares, so its defaults sit in the
# regime where the filter reduces to (nearly) recursive least squares
VERIFY_HYPER = {"process_noise_variance": 1e-8, "initial_state_variance": 1e6}


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        args = _resolve(args)
        cfg = _config_from(args, VERIFY_HYPER)
        series = io.read_series(args.input)
        result = estimate(series, cfg)
    except (ConfigError, LadderTwinError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    work = standardize(series)[0] if cfg.standardize else series
    oracle = ols_oracle(work, cfg.lag_order)
    layout = state_layout(series.n_channels, cfg.lag_order)
    kalman_v = unpack_factors(result.raw_factors, layout)
    oracle_v = unpack_factors(oracle, layout)
    names = series.channel_names
    print(f"{'factor':<24} {'kind':<4} {'kalman':>10} {'ols':>10} {'delta':>10}")
    for fid, kv, ov in zip(layout.entries, kalman_v, oracle_v):
        label = f"{names[fid.cause]}->{names[fid.effect]} lag {fid.lag}"
        print(f"{label:<24} {fid.kind.value:<4} {kv:>10.6g} {ov:>10.6g} {kv - ov:>10.3g}")
    worst = float(np.max(np.abs(kalman_v - oracle_v)))
    tol = args.tolerance if args.tolerance is not None else 1e-2
    print(f"max |delta| = {worst:.6g} (tolerance {tol:g})")
    return EXIT_OK if worst <= tol else EXIT_TOLERANCE


# -- graph -----------------------------------------------------------------

def cmd_graph(args: argparse.Namespace) -> int:
    try:
        args = _resolve(args)
        factors = io.read_factors_json(args.factors)
        emit = _parse_emit(args.emit) - {"factors-json"}
        out_dir = Path(args.out_dir) if args.out_dir else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
        max_edges = args.max_loop_edges if args.max_loop_edges is not None else 6
        max_hops = args.max_hops if args.max_hops is not None else 2
        if max_edges < 2 or max_hops < 0:
            raise ConfigError("need --max-loop-edges >= 2 and --max-hops >= 0")
    except (ConfigError, LadderTwinError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    g = build_ladder(factors)
    counts = g.counts()
    print(f"edges: SNL={counts['SNL']} INL={counts['INL']} INS={counts['INS']}")
    sys.stdout.write(loop_report(g, max_edges))
    print("# propositions")
    sys.stdout.write(proposition_report(g, max_hops))
    if out_dir:
        write_graph_outputs(g, out_dir, Path(args.factors).name.split(".")[0], emit, max_edges, max_hops)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laddertwin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate causal factors for one or more files")
    p.add_argument("inputs", nargs="*", help="data files or directories (.csv or IMS text)")
    _add_common(p)
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="generate a synthetic series from a factors JSON")
    p.add_argument("--factors", required=True)
    p.add_argument("--length", type=int, default=20480)
    p.add_argument("--noise", default="1.0", help="noise scale, one value or one per channel")
    p.add_argument("--seed", type=int)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--sample-interval", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "ims"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="compare the filter against batch least squares")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--tolerance", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("graph", help="ladder graph reports from a factors JSON")
    p.add_argument("factors")
    _add_common(p)
    p.add_argument("--max-loop-edges", type=int)
    p.add_argument("--max-hops", type=int)
    p.set_defaults(func=cmd_graph)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
