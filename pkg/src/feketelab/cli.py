"""Command-line orchestration: solve, cache, diagnose, run experiments.

The CLI owns no numerics.  It resolves a run configuration from flags,
loads or solves the configurations each command needs, calls the library,
and writes artifacts (JSON + CSV + a rendered figure per report).  Every
artifact embeds the resolved run configuration and a content hash of the
installed package sources.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import cache as cache_mod
from .errors import (
    CountMismatch,
    DomainError,
    FeketeLabError,
    InsufficientTrials,
    LevelMismatch,
    ModelMismatch,
    NonConvergence,
    SchemaError,
    SpaceMismatch,
)
from .fekete import (
    SolverOptions,
    cap_discrepancy,
    min_separation,
    solve_fekete,
)
from .geometry import get_geometry
from .interpolation import lagrange_sections, lebesgue_constant, witness_section
from .random import (
    GaussianEnsemble,
    fekete_max_experiment,
    l2_sampling_experiment,
    oversampling_experiment,
    sampling_ratio_experiment,
    sup_norm_experiment,
)
from .reporting import ExperimentReport, render_figures
from .sections import bergman_decay_ratio, bergman_norm_array, get_space

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_CACHE_MISS = 4

_VALIDATION_ERRORS = (
    DomainError,
    ModelMismatch,
    SpaceMismatch,
    LevelMismatch,
    CountMismatch,
    InsufficientTrials,
    SchemaError,
    ValueError,
)


class CacheMiss(FeketeLabError):
    """Requested configuration absent from the cache under --no-solve."""


def code_content_hash():
    """Hash of the installed package sources, for artifact provenance."""
    pkg_dir = Path(__file__).resolve().parent
    digest = hashlib.sha256()
    for path in sorted(pkg_dir.glob("*.py")):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()[:16]


def _parse_k_list(text):
    try:
        ks = [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise DomainError(f"bad k list {text!r}") from None
    if not ks:
        raise DomainError("empty k list")
    return ks


def build_parser():
    top = argparse.ArgumentParser(
        prog="fekete-lab",
        description="Fekete configurations, interpolation diagnostics and "
        "random-section experiments on model geometries.",
    )

    def common(p, k_required=True):
        p.add_argument("--model", choices=("cp1", "cp1xcp1"), default="cp1")
        group = p.add_mutually_exclusive_group(required=k_required)
        group.add_argument("--k", type=int)
        group.add_argument("--k-list", dest="k_list", type=str)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--starts", type=int, default=None)
        p.add_argument("--cache-dir", dest="cache_dir", default=None)
        p.add_argument("--out-dir", dest="out_dir", default="reports")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--no-solve", dest="no_solve", action="store_true")
        p.add_argument("--dry-run", dest="dry_run", action="store_true")
        p.add_argument(
            "--allow-uncertified", dest="allow_uncertified", action="store_true"
        )

    sub = top.add_subparsers(dest="command", required=True)

    fekete = sub.add_parser("fekete", help="node solver commands")
    fsub = fekete.add_subparsers(dest="subcommand", required=True)
    solve = fsub.add_parser("solve", help="solve and cache configurations")
    common(solve)

    leb = sub.add_parser("lebesgue", help="Lebesgue constants of cached nodes")
    common(leb)

    wit = sub.add_parser("witness", help="build the large-ratio witness section")
    common(wit)
    wit.add_argument("--eps", type=float, default=0.2)

    rand = sub.add_parser("random", help="Gaussian section experiments")
    rsub = rand.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
        ("sup", "sup-norm distribution"),
        ("ratio", "sup over node-max ratios"),
        ("l2", "L2 mass against node averages"),
        ("max", "distribution of the maximal node value"),
    ):
        p = rsub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--trials", type=int, default=200)

    over = sub.add_parser("oversample", help="node control above the section level")
    common(over)
    over.add_argument("--a", type=float, default=1.5)
    over.add_argument("--trials", type=int, default=200)
    over.add_argument("--eps", type=float, default=0.2)

    diag = sub.add_parser("diag", help="node-set diagnostics")
    dsub = diag.add_subparsers(dest="subcommand", required=True)
    sep = dsub.add_parser("separation", help="scaled minimal separation")
    common(sep)
    equi = dsub.add_parser("equidist", help="cap-count discrepancy")
    common(equi)
    equi.add_argument("--r-scale", dest="r_scale", type=float, default=1.0)
    berg = dsub.add_parser("bergman", help="kernel identities and decay bound")
    common(berg)

    cache = sub.add_parser("cache", help="cache maintenance")
    csub = cache.add_subparsers(dest="subcommand", required=True)
    ls = csub.add_parser("ls", help="list cached configurations")
    ls.add_argument("--cache-dir", dest="cache_dir", default=None)

    return top


def _run_config(args):
    skip = {"command", "subcommand"}
    return {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in skip and value is not None
    }


def _resolve_levels(args):
    if getattr(args, "k_list", None):
        ks = _parse_k_list(args.k_list)
    elif getattr(args, "k", None) is not None:
        ks = [args.k]
    else:
        raise DomainError("a level is required (--k or --k-list)")
    for k in ks:
        if k < 1:
            raise DomainError(f"level must be >= 1, got {k}")
    return ks


def _validate(args):
    ks = _resolve_levels(args) if hasattr(args, "k") else []
    if getattr(args, "trials", None) is not None and args.trials < 1:
        raise DomainError(f"trials must be >= 1, got {args.trials}")
    if getattr(args, "starts", None) is not None and args.starts < 1:
        raise DomainError(f"starts must be >= 1, got {args.starts}")
    if getattr(args, "eps", None) is not None and not 0.0 < args.eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {args.eps}")
    if getattr(args, "a", None) is not None and args.a < 1.0:
        raise DomainError(f"oversampling factor must be >= 1, got {args.a}")
    if getattr(args, "r_scale", None) is not None and args.r_scale <= 0:
        raise DomainError(f"r-scale must be positive, got {args.r_scale}")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise DomainError(f"threads must be >= 1, got {args.threads}")
    return ks


class _Runner:
    """Per-invocation context: cache store, run config, provenance."""

    def __init__(self, args, levels):
        self.args = args
        self.levels = levels
        # the environment variable wins over the flag
        root = os.environ.get(cache_mod.ENV_VAR) or getattr(args, "cache_dir", None)
        self.store = cache_mod.CacheStore(root)
        self.out_dir = Path(getattr(args, "out_dir", "reports"))
        self.run_config = _run_config(args)
        self.code_hash = code_content_hash()

    def config_for(self, k):
        """Load the (model, k) configuration, solving on a cache miss."""
        model = self.args.model
        cached = self.store.load(model, k) if self.store.has(model, k) else None
        if cached is not None:
            if not cached.certificate.passes() and not self.args.allow_uncertified:
                raise DomainError(
                    f"cached {model} k={k} configuration is uncertified; "
                    "pass --allow-uncertified to use it"
                )
            return cached
        if self.args.no_solve:
            raise CacheMiss(f"no cached configuration for {model} k={k}")
        space = get_space(model, k)
        options = SolverOptions(
            starts=self.args.starts,
            seed=self.args.seed,
            allow_uncertified=self.args.allow_uncertified,
        )
        config = solve_fekete(space, options)
        config.solver_meta["run_config"] = self.run_config
        config.solver_meta["code_hash"] = self.code_hash
        self.store.store(config)
        return config

    def emit(self, report):
        report.params["run_config"] = self.run_config
        report.params["code_hash"] = self.code_hash
        paths = [report.write_json(self.out_dir), report.write_csv(self.out_dir)]
        paths += render_figures(report, self.out_dir)
        for path in paths:
            print(f"wrote {path}")
        return paths

    def combined(self, experiment, rows, k_label, params=None):
        return ExperimentReport(
            experiment=experiment,
            model=self.args.model,
            k=k_label,
            seed=self.args.seed,
            params=dict(params or {}),
            rows=rows,
        )


def _k_label(levels):
    if len(levels) == 1:
        return levels[0]
    return f"{min(levels)}to{max(levels)}"


def _cmd_solve(runner):
    for k in runner.levels:
        model = runner.args.model
        had = runner.store.has(model, k)
        t0 = time.time()
        config = runner.config_for(k)
        status = "cached" if had else f"solved in {time.time() - t0:.1f}s"
        print(
            f"{model} k={k} N={config.size} "
            f"log_vdm={config.log_vdm:.12f} "
            f"sup={config.certificate.max_lagrange_sup:.9f} ({status})"
        )
        print(f"cache {runner.store.path_for(model, k)}")
    return EXIT_OK


def _cmd_lebesgue(runner):
    rows = []
    for k in runner.levels:
        config = runner.config_for(k)
        basis = lagrange_sections(config)
        value, point = lebesgue_constant(basis)
        dim = config.space.dim
        rows.append(
            {
                "k": k,
                "nodes": config.size,
                "lebesgue": value,
                "over_dim": value / dim,
                "over_log_dim": value / math.log(dim),
                "argmax": json.dumps(config.space.geometry.point_to_json(point)),
            }
        )
        print(
            f"{runner.args.model} k={k} lebesgue={value:.6f} "
            f"over_log_dim={value / math.log(dim):.6f}"
        )
    report = runner.combined(
        "lebesgue", rows, _k_label(runner.levels), {"levels": runner.levels}
    )
    runner.emit(report)
    return EXIT_OK


def _cmd_witness(runner):
    rows = []
    for k in runner.levels:
        config = runner.config_for(k)
        section, ratio, diag = witness_section(
            config, eps=runner.args.eps, seed=runner.args.seed
        )
        rows.append(
            {
                "k": k,
                "eps": runner.args.eps,
                "ratio": ratio,
                "vanishing_level": diag["vanishing_level"],
                "ball_radius": diag["ball_radius"],
                "nodes_in_ball": diag["nodes_in_ball"],
                "sup": diag["sup"],
                "node_max": diag["node_max"],
            }
        )
        print(f"{runner.args.model} k={k} eps={runner.args.eps} ratio={ratio:.6f}")
    report = runner.combined(
        "witness",
        rows,
        _k_label(runner.levels),
        {"eps": runner.args.eps, "levels": runner.levels},
    )
    runner.emit(report)
    return EXIT_OK


def _merge_single_row_reports(runner, experiment, reports):
    rows = [rep.rows[0] for rep in reports]
    params = {"levels": runner.levels}
    params.update(
        {
            key: value
            for key, value in reports[0].params.items()
            if key not in ("nodes", "node_level")
        }
    )
    return runner.combined(experiment, rows, _k_label(runner.levels), params)


def _cmd_random(runner):
    sub = runner.args.subcommand
    trials = runner.args.trials
    reports = []
    for k in runner.levels:
        space = get_space(runner.args.model, k)
        ensemble = GaussianEnsemble(space, runner.args.seed)
        if sub == "sup":
            rep = sup_norm_experiment(ensemble, trials)
        else:
            config = runner.config_for(k)
            if sub == "ratio":
                rep = sampling_ratio_experiment(ensemble, config, trials)
            elif sub == "l2":
                rep = l2_sampling_experiment(ensemble, config, trials)
            else:
                rep = fekete_max_experiment(ensemble, config, trials)
        reports.append(rep)
        row = rep.rows[0]
        headline = {
            "sup": f"normalized_median={row.get('normalized_median', 0):.4f}",
            "ratio": f"q95={row.get('ratio_q95', 0):.4f}",
            "l2": f"spread={row.get('r_spread', 0):.4f}",
            "max": f"normalized_mean={row.get('normalized_mean', 0):.4f}",
        }[sub]
        print(f"{runner.args.model} k={k} trials={trials} {headline}")
    merged = _merge_single_row_reports(runner, reports[0].experiment, reports)
    runner.emit(merged)
    return EXIT_OK


def _cmd_oversample(runner):
    reports = []
    for k in runner.levels:
        m = int(math.ceil(runner.args.a * k))
        config_k = runner.config_for(k)
        config_m = runner.config_for(m)
        ensemble = GaussianEnsemble(config_k.space, runner.args.seed)
        witness, _, _ = witness_section(
            config_k, eps=runner.args.eps, seed=runner.args.seed
        )
        rep = oversampling_experiment(
            ensemble, config_m, runner.args.trials, witness=witness
        )
        rep.rows[0]["a"] = runner.args.a
        reports.append(rep)
        row = rep.rows[0]
        print(
            f"{runner.args.model} k={k} m={m} worst={row['worst_ratio']:.4f} "
            f"witness={row['witness_ratio']:.4f}"
        )
    merged = _merge_single_row_reports(runner, "oversample", reports)
    merged.params["a"] = runner.args.a
    merged.params["eps"] = runner.args.eps
    runner.emit(merged)
    return EXIT_OK


def _cmd_diag_separation(runner):
    rows = []
    for k in runner.levels:
        config = runner.config_for(k)
        scaled = min_separation(config)
        rows.append(
            {
                "k": k,
                "nodes": config.size,
                "scaled_min_separation": scaled,
                "min_separation": scaled / math.sqrt(k),
            }
        )
        print(f"{runner.args.model} k={k} sqrt(k)*min_sep={scaled:.6f}")
    report = runner.combined(
        "separation", rows, _k_label(runner.levels), {"levels": runner.levels}
    )
    runner.emit(report)
    return EXIT_OK


def _cmd_diag_equidist(runner):
    reports = []
    for k in runner.levels:
        config = runner.config_for(k)
        rep = cap_discrepancy(config, r_scale=runner.args.r_scale)
        reports.append(rep)
        row = rep.rows[0]
        print(
            f"{runner.args.model} k={k} radius={row['radius']:.4f} "
            f"max_rel_err={row['max_rel_err']:.4f}"
        )
    merged = _merge_single_row_reports(runner, "equidist", reports)
    merged.params["r_scale"] = runner.args.r_scale
    runner.emit(merged)
    return EXIT_OK


def _cmd_diag_bergman(runner):
    rows = []
    for k in runner.levels:
        space = get_space(runner.args.model, k)
        rng = np.random.default_rng(runner.args.seed)
        pts = space.geometry.uniform_points_array(rng, 100)
        diag_vals = bergman_norm_array(space, pts, pts)
        diag_err = float(np.max(np.abs(diag_vals - space.dim))) / space.dim
        ratio = bergman_decay_ratio(space)
        rows.append(
            {
                "k": k,
                "dim": space.dim,
                "diag_rel_err": diag_err,
                "max_bound_ratio": ratio,
            }
        )
        print(
            f"{runner.args.model} k={k} diag_rel_err={diag_err:.2e} "
            f"decay_bound_ratio={ratio:.4f}"
        )
    report = runner.combined(
        "bergman", rows, _k_label(runner.levels), {"levels": runner.levels}
    )
    runner.emit(report)
    return EXIT_OK


def _cmd_cache_ls(runner):
    entries = runner.store.entries()
    if not entries:
        print(f"cache {runner.store.root} is empty")
        return EXIT_OK
    for model, k, path in entries:
        print(f"{model:8s} k={k:<3d} {path}")
    return EXIT_OK


def _dry_run_plan(args, levels):
    plan = {
        "command": args.command,
        "subcommand": getattr(args, "subcommand", None),
        "run_config": _run_config(args),
        "levels": levels,
        "code_hash": code_content_hash(),
    }
    print(json.dumps(plan, indent=2, sort_keys=True))
    return EXIT_OK


def _dispatch(args, levels):
    runner = _Runner(args, levels)
    if args.command == "fekete":
        return _cmd_solve(runner)
    if args.command == "lebesgue":
        return _cmd_lebesgue(runner)
    if args.command == "witness":
        return _cmd_witness(runner)
    if args.command == "random":
        return _cmd_random(runner)
    if args.command == "oversample":
        return _cmd_oversample(runner)
    if args.command == "diag":
        return {
            "separation": _cmd_diag_separation,
            "equidist": _cmd_diag_equidist,
            "bergman": _cmd_diag_bergman,
        }[args.subcommand](runner)
    if args.command == "cache":
        return _cmd_cache_ls(runner)
    raise DomainError(f"unknown command {args.command!r}")


def _emit_error(exc, code):
    payload = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        levels = _validate(args) if hasattr(args, "k") else []
        if getattr(args, "dry_run", False):
            return _dry_run_plan(args, levels)
        threads = getattr(args, "threads", None)
        if threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=threads):
                return _dispatch(args, levels)
        return _dispatch(args, levels)
    except CacheMiss as exc:
        _emit_error(exc, EXIT_CACHE_MISS)
        return EXIT_CACHE_MISS
    except NonConvergence as exc:
        _emit_error(exc, EXIT_NONCONVERGENCE)
        return EXIT_NONCONVERGENCE
    except _VALIDATION_ERRORS as exc:
        _emit_error(exc, EXIT_VALIDATION)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
