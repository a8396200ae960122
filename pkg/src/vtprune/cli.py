"""Command-line entry point.

Subcommands: calibrate (average attention maps into a bias prior), prune
(run the full pipeline on one token dump), synth (generate a synthetic
scene), oracle-check (differential and exhaustive self-tests), bench
(timing and scaling of the core kernels), render (dump or prior to PGM).

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal
invariant violation.  Given identical inputs and flags every command writes
byte-identical outputs; --threads only schedules independent work and never
changes result bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .core import PruneConfig, TokenSet, resolve_budget
from .debias import BiasPrior, calibrate_bias, relative_attention, resize_bias
from .errors import FormatError
from .formats import (
    DUMP_MAGIC,
    DUMP_SUFFIX,
    PRIOR_MAGIC,
    PRIOR_SUFFIX,
    canonical_json,
    read_dump,
    read_prior,
    render_pgm,
    selection_report,
    write_dump,
    write_prior,
    write_selection_report,
)
from .graph import AdjacencyGraph, build_graph
from .oracle import (
    ObjectiveParams,
    exhaustive_select,
    objective_score,
    random_instance,
    reference_select,
)
from .selection import select_tokens
from .synth import BIAS_PROFILES, RNG_ALGORITHM, SceneSpec, generate_scene

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DEFAULTS = {
    "epsilon": 1e-7,
    "alpha": 1.0,
    "theta_sim": 0.8,
    "pivot_ratio": 0.7,
    "keep": "0.333",
    "layer": 2,
}

# Typical full-sequence prefill of a 7B-class multimodal decoder on a
# 2880-visual-token sample, used only to put the pruner's own cost in
# perspective in bench output.
REFERENCE_PREFILL_MS = 350.0

THREADS_ENV = "D2P_THREADS"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_keep(text: str):
    """'288' -> absolute count, '0.333' -> ratio."""
    text = text.strip()
    try:
        if any(c in text for c in ".eE"):
            return float(text)
        return int(text)
    except ValueError:
        raise UsageError(f"invalid --keep value {text!r}") from None


def _load_config_file(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as e:
        raise DataError(f"cannot read config file: {e}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"config file is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise DataError("config file must hold a JSON object")
    allowed = set(DEFAULTS) | {"threads"}
    unknown = set(cfg) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _resolve_config(args) -> PruneConfig:
    """defaults < --config file < explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    for key in ("epsilon", "alpha", "theta_sim", "pivot_ratio", "keep", "layer"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    keep = merged["keep"]
    if isinstance(keep, str):
        keep = _parse_keep(keep)
    try:
        if isinstance(keep, int):
            return PruneConfig(epsilon=float(merged["epsilon"]),
                               alpha=float(merged["alpha"]),
                               theta_sim=float(merged["theta_sim"]),
                               pivot_ratio=float(merged["pivot_ratio"]),
                               keep_count=keep, layer=int(merged["layer"]))
        return PruneConfig(epsilon=float(merged["epsilon"]),
                           alpha=float(merged["alpha"]),
                           theta_sim=float(merged["theta_sim"]),
                           pivot_ratio=float(merged["pivot_ratio"]),
                           keep_ratio=float(keep), layer=int(merged["layer"]))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _resolve_threads(args) -> int:
    t = getattr(args, "threads", None)
    if t is None:
        env = os.environ.get(THREADS_ENV)
        t = int(env) if env else 1
    if t < 1:
        raise UsageError("--threads must be >= 1")
    return t


def _add_config_flags(p, *, budget=True):
    p.add_argument("--config", metavar="PATH",
                   help="JSON config overriding defaults (flags win)")
    p.add_argument("--epsilon", type=float, default=None,
                   help=f"division guard (default {DEFAULTS['epsilon']})")
    p.add_argument("--alpha", type=float, default=None,
                   help=f"semantic vs spatial weight (default {DEFAULTS['alpha']})")
    p.add_argument("--theta", dest="theta_sim", type=float, default=None,
                   help=f"edge threshold (default {DEFAULTS['theta_sim']})")
    p.add_argument("--pivot-ratio", dest="pivot_ratio", type=float, default=None,
                   help=f"share of budget kept as pivots (default {DEFAULTS['pivot_ratio']})")
    if budget:
        p.add_argument("--keep", default=None,
                       help=f"tokens to keep: count or ratio (default {DEFAULTS['keep']})")
    p.add_argument("--layer", type=int, default=None,
                   help=f"layer metadata echoed in reports (default {DEFAULTS['layer']})")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads for independent tasks; results never "
                        f"depend on it (default 1, env {THREADS_ENV})")


def cmd_calibrate(args) -> int:
    dump_dir = Path(args.dumps)
    if not dump_dir.is_dir():
        raise DataError(f"{dump_dir}: not a directory")
    paths = sorted(dump_dir.glob(f"*{DUMP_SUFFIX}"))
    if not paths:
        raise DataError(f"no dumps found in {dump_dir}")
    grids = []
    for p in paths:
        _, grid = read_dump(p)
        if grids and not grid.same_shape(grids[0][1]):
            first_p, first_g = grids[0]
            raise DataError(
                f"{p}: grid {grid.h}x{grid.w} does not match "
                f"{first_g.h}x{first_g.w} of {first_p}")
        grids.append((p, grid))
    prior = calibrate_bias([g for _, g in grids])
    write_prior(prior, args.out)
    print(f"sample_count: {prior.sample_count}")
    print(f"wrote prior {prior.grid.h}x{prior.grid.w} -> {args.out}")
    return EXIT_OK


def cmd_prune(args) -> int:
    cfg = _resolve_config(args)
    threads = _resolve_threads(args)
    ts, a_ori = read_dump(args.dump)
    prior = read_prior(args.prior)
    prior_resized = not a_ori.same_shape(prior.grid)
    if prior_resized:
        prior = resize_bias(prior, a_ori.h, a_ori.w)
    rel = relative_attention(a_ori, prior, cfg.epsilon)
    adj = build_graph(ts, cfg)
    n = resolve_budget(cfg, ts.n)
    result = select_tokens(rel, adj, n, cfg.pivot_ratio)
    report = selection_report(result, cfg, n=n, grid=(ts.h, ts.w),
                              edge_count=adj.edge_count,
                              prior_resized=prior_resized)
    write_selection_report(report, args.out)

    if args.render_dir:
        render_dir = Path(args.render_dir)
        render_dir.mkdir(parents=True, exist_ok=True)
        mask = result.mask().reshape(ts.h, ts.w)
        jobs = [
            (a_ori, render_dir / "a_ori.pgm"),
            (rel, render_dir / "a_rel.pgm"),
            (prior.grid, render_dir / "prior.pgm"),
            (mask, render_dir / "kept_mask.pgm"),
        ]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda job: render_pgm(*job), jobs))

    print(f"kept {result.n} of {ts.n} tokens "
          f"({len(result.pivots)} pivots, excluded {result.excluded_count}) "
          f"-> {args.out}")
    return EXIT_OK


def _parse_rows(text):
    if text is None:
        return None
    try:
        lo, hi = text.split(":")
        return (int(lo), int(hi))
    except ValueError:
        raise UsageError(f"invalid --rows value {text!r}, expected LO:HI") from None


def cmd_synth(args) -> int:
    spec = SceneSpec(
        seed=args.seed, h=args.h, w=args.w, dim=args.d,
        object_count=args.objects, object_radius=args.radius,
        noise_sigma=args.noise, bias_profile=args.bias,
        bias_strength=args.beta, saliency_gain=args.gain,
        center_rows=_parse_rows(args.rows),
    )
    scene = generate_scene(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_path = out_dir / f"scene{DUMP_SUFFIX}"
    prior_path = out_dir / f"true_bias{PRIOR_SUFFIX}"
    write_dump(scene.tokens, scene.attention, dump_path)
    write_prior(BiasPrior(grid=scene.true_bias, sample_count=1), prior_path)
    meta = {
        "rng_algorithm": RNG_ALGORITHM,
        "seed": spec.seed,
        "grid": [spec.h, spec.w],
        "dim": spec.dim,
        "object_count": spec.object_count,
        "object_radius": spec.object_radius,
        "noise_sigma": spec.noise_sigma,
        "bias_profile": spec.bias_profile,
        "bias_strength": spec.bias_strength,
        "saliency_gain": spec.saliency_gain,
        "center_rows": list(spec.center_rows) if spec.center_rows else None,
        "salient_cells": list(scene.salient_cells),
    }
    (out_dir / "scene.json").write_text(canonical_json(meta), encoding="ascii")
    print(f"wrote {dump_path}, {prior_path}, {out_dir / 'scene.json'}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    rng = np.random.Generator(np.random.PCG64(args.seed))
    diff_failures = 0
    for _ in range(args.n_cases):
        scores, adj, n, r_pivot = random_instance(rng)
        if select_tokens(scores, adj, n, r_pivot) != reference_select(
                scores, adj, n, r_pivot):
            diff_failures += 1
    print(f"differential cases: {args.n_cases}, failures: {diff_failures}")

    exh_failures = 0
    ratios = {lam: [] for lam in (0.0, 0.1, 1.0)}
    n_exhaustive = min(args.n_cases, 200)
    for _ in range(n_exhaustive):
        n_tokens = int(rng.integers(2, args.max_n + 1))
        scores = rng.random(n_tokens)
        density = rng.uniform(0.0, 0.5)
        m = rng.random((n_tokens, n_tokens)) < density
        m = np.triu(m, 1)
        adj_m = m | m.T
        adj = AdjacencyGraph(matrix=adj_m)
        edgeless = AdjacencyGraph(matrix=np.zeros_like(adj_m))
        n = int(rng.integers(1, n_tokens + 1))
        top_n = tuple(sorted(np.lexsort((np.arange(n_tokens), -scores))[:n]))
        if exhaustive_select(scores, adj, n, ObjectiveParams(lam=0.0)) != top_n:
            exh_failures += 1
        greedy_free = tuple(select_tokens(scores, edgeless, n, 0.7).kept)
        exh_free = exhaustive_select(scores, edgeless, n,
                                     ObjectiveParams(lam=1.0))
        if greedy_free != exh_free:
            exh_failures += 1
        for lam in ratios:
            params = ObjectiveParams(lam=lam)
            greedy = select_tokens(scores, adj, n, 0.7).kept
            opt = exhaustive_select(scores, adj, n, params)
            g = objective_score(scores, adj, greedy, params)
            o = objective_score(scores, adj, opt, params)
            if o > 0:
                ratios[lam].append(g / o)
    print(f"exhaustive cases: {n_exhaustive}, failures: {exh_failures}")
    for lam, rs in sorted(ratios.items()):
        if rs:
            print(f"greedy/optimal ratio (lam={lam:g}): "
                  f"min={min(rs):.4f} median={statistics.median(rs):.4f} "
                  f"mean={statistics.fmean(rs):.4f} (diagnostic)")
    total = diff_failures + exh_failures
    print(f"failures: {total}")
    return EXIT_OK if total == 0 else EXIT_INTERNAL


def _bench_grid(n_tokens: int) -> tuple[int, int]:
    h = int(math.isqrt(n_tokens))
    while n_tokens % h:
        h -= 1
    return h, n_tokens // h


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise UsageError(f"invalid --sizes value {args.sizes!r}") from None
    if not sizes or any(s < 2 for s in sizes):
        raise UsageError("--sizes must be a comma list of integers >= 2")
    threads = _resolve_threads(args)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    cfg = PruneConfig(keep_ratio=0.333)
    build_medians = []
    select_medians = []
    print(f"{'N':>6} {'grid':>9} {'build_graph ms':>15} {'select ms':>10} "
          f"{'total ms':>9}")
    for n_tokens in sizes:
        h, w = _bench_grid(n_tokens)
        ts = TokenSet(h=h, w=w, features=rng.normal(size=(n_tokens, args.d)))
        scores = rng.random(n_tokens)
        n = resolve_budget(cfg, n_tokens)

        def time_build():
            t0 = time.perf_counter()
            build_graph(ts, cfg)
            return (time.perf_counter() - t0) * 1e3

        adj = build_graph(ts, cfg)

        def time_select():
            t0 = time.perf_counter()
            select_tokens(scores, adj, n, cfg.pivot_ratio)
            return (time.perf_counter() - t0) * 1e3

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                build_ts = list(pool.map(lambda _: time_build(),
                                         range(args.repeats)))
                select_ts = list(pool.map(lambda _: time_select(),
                                          range(args.repeats)))
        else:
            build_ts = [time_build() for _ in range(args.repeats)]
            select_ts = [time_select() for _ in range(args.repeats)]
        b = statistics.median(build_ts)
        s = statistics.median(select_ts)
        build_medians.append(b)
        select_medians.append(s)
        print(f"{n_tokens:>6} {h:>4}x{w:<4} {b:>15.2f} {s:>10.2f} "
              f"{b + s:>9.2f}")

    fit_sizes = [(n, t) for n, t in zip(sizes, build_medians) if n >= 256]
    if len(fit_sizes) >= 2:
        xs = np.log([n for n, _ in fit_sizes])
        ys = np.log([t for _, t in fit_sizes])
        slope = float(np.polyfit(xs, ys, 1)[0])
        print(f"build_graph growth exponent (N >= 256): {slope:.3f}")
    largest_total = build_medians[-1] + select_medians[-1]
    print(f"pruner cost at N={sizes[-1]}: {largest_total:.1f} ms "
          f"({100.0 * largest_total / REFERENCE_PREFILL_MS:.2f}% of a "
          f"typical {REFERENCE_PREFILL_MS:.0f} ms full-sequence prefill)")
    return EXIT_OK


def cmd_render(args) -> int:
    data = Path(args.infile).read_bytes()[:4]
    if data == DUMP_MAGIC:
        _, grid = read_dump(args.infile)
    elif data == PRIOR_MAGIC:
        grid = read_prior(args.infile).grid
    else:
        raise DataError(f"{args.infile}: neither a token dump nor a prior")
    render_pgm(grid, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vtprune",
                     description="Debiased-attention, diversity-aware visual "
                                 "token pruning engine")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("calibrate", formatter_class=fmt,
                       help="average dump attentions into a bias prior")
    p.add_argument("--dumps", required=True, help="directory of *.d2td dumps")
    p.add_argument("--out", required=True, help="output prior file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("prune", formatter_class=fmt,
                       help="run the full pruning pipeline on one dump")
    p.add_argument("--dump", required=True, help="input token dump")
    p.add_argument("--prior", required=True,
                   help="bias prior (auto-resized on grid mismatch)")
    p.add_argument("--out", required=True, help="output selection report")
    p.add_argument("--render-dir", default=None,
                   help="also write PGM heatmaps here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("synth", formatter_class=fmt,
                       help="generate a synthetic scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=int, default=24)
    p.add_argument("--w", type=int, default=24)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--objects", type=int, default=3)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--bias", choices=BIAS_PROFILES, default="uniform")
    p.add_argument("--beta", type=float, default=1.0,
                   help="bias peak multiplier (>= 1)")
    p.add_argument("--gain", type=float, default=4.0,
                   help="saliency gain of object cells")
    p.add_argument("--rows", default=None,
                   help="restrict object-center rows to LO:HI")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle-check", formatter_class=fmt,
                       help="differential and exhaustive self-tests")
    p.add_argument("--n-cases", type=int, default=1000)
    p.add_argument("--max-n", type=int, default=12,
                   help="token count bound for exhaustive search")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("bench", formatter_class=fmt,
                       help="time graph construction and selection")
    p.add_argument("--sizes", default="64,256,576,1024,2880",
                   help="comma list of token counts")
    p.add_argument("--d", type=int, default=128)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"concurrent timing workers; single-threaded by "
                        f"default (env {THREADS_ENV})")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", formatter_class=fmt,
                       help="render a dump attention or prior as PGM")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"vtprune: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"vtprune: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FormatError as e:
        print(f"vtprune: error [{e.code}]: {e}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as e:
        print(f"vtprune: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # invariant violations and everything unexpected
        print(f"vtprune: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
