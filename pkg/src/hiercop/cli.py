"""``hiercop`` command line: simulate, fit, cluster, tail-report.

Results go to files in ``--out``; stdout carries a short table; progress and
warnings go to stderr.  Exit codes: 0 ok, 2 usage, 3 config, 4 data,
5 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .copula import GroupSpec
from .errors import ConfigError, DataError, DomainError, HiercopError, NumericError
from .mcmc import run_chains, summarize
from .mle import run_simulation_study
from .tail import complete_linkage_cluster, dissimilarity_matrix, posterior_tail_summary

log = logging.getLogger("hiercop")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5


def _mcmc_flags(p):
    g = p.add_argument_group("sampler")
    g.add_argument("--chains", type=int)
    g.add_argument("--scans", type=int)
    g.add_argument("--burn-in", type=int)
    g.add_argument("--thin", type=int)
    g.add_argument("--delta-gamma", type=float)
    g.add_argument("--delta-xi", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--progress-every", type=int, help="log every N scans per chain (0: off)")
    g.add_argument("--threads", type=int, help="worker processes (default: $HIERCOP_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiercop", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Bayes vs MLE squared-error study on simulated t-copula data")
    p.add_argument("--config", type=Path)
    p.add_argument("--replications", type=int)
    p.add_argument("--out", type=Path, required=True)
    _mcmc_flags(p)

    p = sub.add_parser("fit", help="posterior sampling for the groups defined in a config")
    p.add_argument("data", type=Path, nargs="?")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--kind", choices=["auto", "raw", "pseudo"])
    p.add_argument("--out", type=Path, required=True)
    _mcmc_flags(p)

    p = sub.add_parser("cluster", help="lower-tail dissimilarities and size-bounded complete linkage")
    p.add_argument("data", type=Path, nargs="?")
    p.add_argument("--config", type=Path)
    p.add_argument("--kind", choices=["auto", "raw", "pseudo"])
    p.add_argument("--max-size", type=int)
    p.add_argument("--drop-singletons", dest="drop_singletons", action="store_true", default=None)
    p.add_argument("--keep-singletons", dest="drop_singletons", action="store_false")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("tail-report", help="posterior lower-tail coefficients from a saved sample store")
    p.add_argument("store", type=Path)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _load_config(args) -> dataio.RunConfig:
    cfg = dataio.parse_config(args.config) if getattr(args, "config", None) else dataio.RunConfig()
    if "threads" in vars(args):
        threads = args.threads if args.threads is not None else dataio.default_threads()
        overrides = {
            "chains": args.chains, "scans": args.scans, "burn_in": args.burn_in, "thin": args.thin,
            "delta_gamma": args.delta_gamma, "delta_xi": args.delta_xi, "seed": args.seed,
            "progress_every": args.progress_every, "n_jobs": threads,
        }
        kw = {k: v for k, v in overrides.items() if v is not None}
        if args.burn_in is None and args.scans is not None and cfg.mcmc.burn_in >= args.scans:
            raise ConfigError(f"burn-in {cfg.mcmc.burn_in} from config is not below --scans {args.scans}")
        cfg.mcmc = dataclasses.replace(cfg.mcmc, **kw)
    if getattr(args, "kind", None):
        cfg.io.kind = args.kind
    if getattr(args, "data", None):
        cfg.io.data = str(args.data)
    cfg.io.output = str(args.out)
    return cfg


def _prepare_out(cfg: dataio.RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_config(cfg, out / "effective_config.toml")


def _load_pseudo(cfg: dataio.RunConfig) -> dataio.Dataset:
    if not cfg.io.data:
        raise ConfigError("no data file given (positional argument or io.data)")
    data = dataio.load_csv(cfg.io.data, cfg.io.kind)
    if data.kind == "raw":
        log.info("rank-transforming raw data to pseudo-observations")
        data = dataio.rank_transform(data)
    return data


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    sim = cfg.simulation_config()
    if args.replications is not None:
        sim = dataclasses.replace(sim, replications=args.replications)
    sim = dataclasses.replace(sim, n_jobs=cfg.mcmc.n_jobs,
                              mcmc=dataclasses.replace(cfg.mcmc, n_jobs=1))
    cfg.simulation = sim
    _prepare_out(cfg, args.out)
    report = run_simulation_study(sim)
    dataio.write_mse_report(report, args.out / "mse.csv")
    text = dataio.format_mse_report(report)
    (args.out / "mse.txt").write_text(text)
    sys.stdout.write(text)
    for rep, err in report.failures:
        log.error("replication %d failed: %s", rep, err)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    if not cfg.groups:
        raise ConfigError("config defines no groups")
    data = _load_pseudo(cfg)
    cfg.check_columns(data)
    groups = []
    for g in cfg.groups:
        u = data.columns(g.columns)
        complete = ~np.isnan(u).any(axis=1)
        if not complete.all():
            log.warning("group %s: dropping %d incomplete rows", g.name, int((~complete).sum()))
        groups.append(GroupSpec(g.family, u[complete], name=g.name))
    _prepare_out(cfg, args.out)
    log.info("sampling %d groups: %d chains x %d scans (seed %d)",
             len(groups), cfg.mcmc.chains, cfg.mcmc.scans, cfg.mcmc.seed)
    store = run_chains(groups, cfg.mcmc)
    dataio.write_store(store, args.out / "chains")
    summary = summarize(store)
    dataio.write_summary(summary, args.out / "summary.csv")
    text = f"seed {cfg.mcmc.seed}, {summary.n_draws} pooled draws\n" + dataio.format_summary(summary)
    (args.out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    if args.max_size is not None:
        cfg.clustering.max_size = args.max_size
    if args.drop_singletons is not None:
        cfg.clustering.drop_singletons = args.drop_singletons
    data = _load_pseudo(cfg)
    _prepare_out(cfg, args.out)
    D = dissimilarity_matrix(data.values, data.labels)
    part = complete_linkage_cluster(D, cfg.clustering.max_size)
    if part.singletons:
        log.info("%d singleton clusters: %s", len(part.singletons), ", ".join(part.singletons))
    if cfg.clustering.drop_singletons:
        part = part.without_singletons()
    dataio.write_dissimilarity(D, args.out / "dissimilarity.csv")
    dataio.write_partition(part, args.out / "partition.csv")
    for cid, members in enumerate(part.clusters, start=1):
        sys.stdout.write(f"{cid}: {' '.join(members)}\n")
    return EXIT_OK


def cmd_tail_report(args) -> int:
    store = dataio.read_store(args.store)
    cfg = _load_config(args)
    _prepare_out(cfg, args.out)
    summaries = posterior_tail_summary(store)
    dataio.write_tail_summary(summaries, args.out / "tail.csv")
    text = dataio.format_tail_summary(summaries)
    (args.out / "tail.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "tail-report": cmd_tail_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, DomainError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except NumericError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except HiercopError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
