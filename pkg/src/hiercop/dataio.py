"""Data loading, rank pseudo-observations, run configuration and result files.

Machine-readable CSVs keep full ``repr`` precision so they reload exactly;
human-readable tables print 6 significant digits.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w
from scipy import stats as sps

from .copula import CLAMP_EPS, Family, ParamBounds, bounds_for, psi_from_gamma
from .errors import ConfigError, DataError, DomainError
from .mcmc import (
    DEFAULT_SEED,
    ChainDraws,
    GroupSummary,
    McmcConfig,
    PosteriorSummary,
    SampleStore,
    Stats,
    _natural_draws,
)
from .mle import MseReport, SimStudyConfig
from .tail import ClusterPartition, DissimilarityMatrix, TailSummary

log = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "GroupConfig",
    "ClusterConfig",
    "IoConfig",
    "RunConfig",
    "load_csv",
    "rank_transform",
    "parse_config",
    "config_from_dict",
    "config_to_dict",
    "write_config",
    "write_store",
    "read_store",
    "write_summary",
    "read_summary",
    "format_summary",
    "write_mse_report",
    "read_mse_report",
    "format_mse_report",
    "write_dissimilarity",
    "read_dissimilarity",
    "write_partition",
    "read_partition",
    "write_tail_summary",
    "format_table",
]

_MISSING = {"", "na", "nan", "null"}


def _fmt(x) -> str:
    """Full-precision text for a float, '' for None."""
    if x is None:
        return ""
    return repr(float(x))


def _g6(x) -> str:
    if x is None:
        return "-"
    return f"{x:.6g}"


# ----------------------------------------------------------------------------
# datasets
# ----------------------------------------------------------------------------

@dataclass
class Dataset:
    labels: list
    values: np.ndarray
    kind: str = "pseudo"
    clamped: int = 0

    def __post_init__(self):
        if self.kind not in ("raw", "pseudo"):
            raise DataError(f"dataset kind must be 'raw' or 'pseudo', got {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.labels):
            raise DataError(f"{len(self.labels)} labels for values of shape {self.values.shape}")
        if len(set(self.labels)) != len(self.labels):
            raise DataError("duplicate column labels")
        if self.kind == "pseudo":
            v = self.values[~np.isnan(self.values)]
            if np.any((v <= 0) | (v >= 1)):
                raise DataError("pseudo-observations must lie strictly inside (0, 1)")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def columns(self, names) -> np.ndarray:
        index = {lab: j for j, lab in enumerate(self.labels)}
        missing = [c for c in names if c not in index]
        if missing:
            raise DataError(f"unknown columns: {', '.join(missing)}")
        return self.values[:, [index[c] for c in names]]


def load_csv(path, kind: str = "auto") -> Dataset:
    """Read a rectangular CSV with a header row of column labels.

    ``kind="pseudo"`` clamps values at 0 or 1 to ``[1e-10, 1 - 1e-10]`` and
    counts them; values outside [0, 1] are an error.  ``kind="auto"`` picks
    pseudo when every value lies in [0, 1].  Empty and ``NA`` cells are
    missing values.
    """
    path = Path(path)
    if kind not in ("auto", "raw", "pseudo"):
        raise DataError(f"kind must be auto, raw or pseudo, got {kind!r}")
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        labels = [h.strip() for h in header]
        seen = set()
        for col, lab in enumerate(labels, start=1):
            if not lab:
                raise DataError(f"{path}:1: empty label in column {col}")
            if lab in seen:
                raise DataError(f"{path}:1: duplicate label {lab!r} in column {col}")
            seen.add(lab)
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(labels):
                raise DataError(f"{path}:{line}: expected {len(labels)} fields, got {len(row)}")
            vals = []
            for col, cell in enumerate(row, start=1):
                text = cell.strip()
                if text.lower() in _MISSING:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(text))
                except ValueError:
                    raise DataError(f"{path}:{line}:{col}: not a number: {cell!r}") from None
            rows.append(vals)
    values = np.array(rows, dtype=float).reshape(len(rows), len(labels))
    if np.isinf(values).any():
        raise DataError(f"{path}: infinite values")
    finite = values[~np.isnan(values)]
    in_unit = bool(np.all((finite >= 0) & (finite <= 1)))
    if kind == "auto":
        kind = "pseudo" if in_unit else "raw"
    clamped = 0
    if kind == "pseudo":
        if not in_unit:
            raise DataError(f"{path}: pseudo-observations outside [0, 1]")
        low = values < CLAMP_EPS
        high = values > 1.0 - CLAMP_EPS
        clamped = int(low.sum() + high.sum())
        if clamped:
            values = np.where(low, CLAMP_EPS, np.where(high, 1.0 - CLAMP_EPS, values))
            log.warning("%s: clamped %d boundary values into [%g, 1-%g]", path, clamped,
                        CLAMP_EPS, CLAMP_EPS)
    log.info("%s: %d rows x %d columns (%s)", path, values.shape[0], values.shape[1], kind)
    return Dataset(labels, values, kind, clamped)


def rank_transform(data: Dataset) -> Dataset:
    """Column-wise average ranks over ``n + 1``; missing values stay missing."""
    out = np.full_like(data.values, np.nan)
    for j, lab in enumerate(data.labels):
        col = data.values[:, j]
        ok = ~np.isnan(col)
        x = col[ok]
        if x.size < 2 or np.all(x == x[0]):
            raise DataError(f"column {lab!r} is constant; ranks carry no information")
        out[ok, j] = sps.rankdata(x, method="average") / (x.size + 1)
    return Dataset(list(data.labels), out, "pseudo")


# ----------------------------------------------------------------------------
# run configuration
# ----------------------------------------------------------------------------

@dataclass
class GroupConfig:
    name: str
    family: Family
    columns: list

    @property
    def dim(self) -> int:
        return len(self.columns)


@dataclass
class ClusterConfig:
    max_size: int = 10
    drop_singletons: bool = True


@dataclass
class IoConfig:
    data: str | None = None
    output: str | None = None
    kind: str = "auto"


@dataclass
class RunConfig:
    groups: list = field(default_factory=list)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    clustering: ClusterConfig = field(default_factory=ClusterConfig)
    simulation: SimStudyConfig | None = None
    io: IoConfig = field(default_factory=IoConfig)

    def simulation_config(self) -> SimStudyConfig:
        sim = self.simulation or SimStudyConfig()
        return dataclasses.replace(sim, mcmc=self.mcmc)

    def check_columns(self, data: Dataset) -> None:
        """Every referenced column must exist in ``data``."""
        problems = []
        have = set(data.labels)
        for g in self.groups:
            missing = [c for c in g.columns if c not in have]
            if missing:
                problems.append(f"group {g.name!r}: unknown columns {', '.join(missing)}")
        if problems:
            raise ConfigError(problems)


_MCMC_KEYS = {f.name: f for f in dataclasses.fields(McmcConfig)}
_SIM_KEYS = ("replications", "groups", "obs", "dim_min", "dim_max", "seed", "n_jobs")
_CLUSTER_KEYS = ("max_size", "drop_singletons")
_IO_KEYS = ("data", "output", "kind")
_GROUP_KEYS = ("name", "family", "columns", "dim")
_TOP_KEYS = ("mcmc", "groups", "clustering", "simulation", "io")


def _expect(problems, where, value, types, name):
    if isinstance(value, bool) and bool not in types:
        problems.append(f"{where}.{name}: expected {types[0].__name__}, got bool")
        return False
    if not isinstance(value, types):
        problems.append(f"{where}.{name}: expected {types[0].__name__}, got {type(value).__name__}")
        return False
    return True


def _unknown(problems, where, table, allowed):
    for key in table:
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r}")


def _mcmc_from(table, problems):
    kw = {}
    for key, value in table.items():
        f = _MCMC_KEYS.get(key)
        if f is None:
            problems.append(f"mcmc: unknown key {key!r}")
            continue
        default = f.default
        if isinstance(default, bool):
            types = (bool,)
        elif isinstance(default, int):
            types = (int,)
        elif isinstance(default, float):
            types = (float, int)
        else:
            types = (str,)
        if _expect(problems, "mcmc", value, types, key):
            kw[key] = float(value) if types[0] is float else value
    if "seed" not in table:
        log.info("mcmc.seed not set; using default %d", DEFAULT_SEED)
    try:
        return McmcConfig(**kw)
    except ConfigError as exc:
        problems.extend(f"mcmc: {p}" for p in exc.problems)
        return None


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a parsed config table; every problem is reported at once."""
    problems = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    _unknown(problems, "config", raw, _TOP_KEYS)

    mcmc = _mcmc_from(raw.get("mcmc", {}), problems)

    groups = []
    names = set()
    for k, g in enumerate(raw.get("groups", []), start=1):
        where = f"groups[{k}]"
        if not isinstance(g, dict):
            problems.append(f"{where}: expected a table")
            continue
        _unknown(problems, where, g, _GROUP_KEYS)
        name = g.get("name", f"group{k}")
        _expect(problems, where, name, (str,), "name")
        if name in names:
            problems.append(f"{where}: duplicate group name {name!r}")
        names.add(name)
        cols = g.get("columns")
        if not isinstance(cols, list) or not all(isinstance(c, str) for c in cols):
            problems.append(f"{where}.columns: expected a list of column labels")
            continue
        if len(set(cols)) != len(cols):
            problems.append(f"{where}.columns: repeated column")
        if "dim" in g and g["dim"] != len(cols):
            problems.append(f"{where}: dim={g['dim']} but {len(cols)} columns listed")
        try:
            fam = Family.parse(g.get("family", ""))
        except DomainError as exc:
            problems.append(f"{where}.family: {exc}")
            continue
        try:
            bounds_for(fam, len(cols))
        except DomainError as exc:
            problems.append(f"{where}: {exc}")
            continue
        groups.append(GroupConfig(name, fam, cols))

    cl_raw = raw.get("clustering", {})
    _unknown(problems, "clustering", cl_raw, _CLUSTER_KEYS)
    clustering = ClusterConfig()
    if "max_size" in cl_raw and _expect(problems, "clustering", cl_raw["max_size"], (int,), "max_size"):
        if cl_raw["max_size"] < 2:
            problems.append("clustering.max_size: must be >= 2")
        clustering.max_size = cl_raw["max_size"]
    if "drop_singletons" in cl_raw and _expect(problems, "clustering", cl_raw["drop_singletons"],
                                               (bool,), "drop_singletons"):
        clustering.drop_singletons = cl_raw["drop_singletons"]

    io_raw = raw.get("io", {})
    _unknown(problems, "io", io_raw, _IO_KEYS)
    io = IoConfig()
    for key in _IO_KEYS:
        if key in io_raw and _expect(problems, "io", io_raw[key], (str,), key):
            setattr(io, key, io_raw[key])
    if io.kind not in ("auto", "raw", "pseudo"):
        problems.append(f"io.kind: must be auto, raw or pseudo, got {io.kind!r}")

    simulation = None
    if "simulation" in raw:
        s = raw["simulation"]
        _unknown(problems, "simulation", s, _SIM_KEYS)
        kw = {}
        for key in _SIM_KEYS:
            if key in s and _expect(problems, "simulation", s[key], (int,), key):
                kw[key] = s[key]
        lo, hi = kw.pop("dim_min", 2), kw.pop("dim_max", 5)
        if mcmc is not None:
            try:
                simulation = SimStudyConfig(dim_range=(lo, hi), mcmc=mcmc, **kw)
            except ConfigError as exc:
                problems.extend(f"simulation: {p}" for p in exc.problems)

    if problems:
        raise ConfigError(problems)
    return RunConfig(groups, mcmc, clustering, simulation, io)


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"mcmc": dataclasses.asdict(cfg.mcmc)}
    if cfg.groups:
        out["groups"] = [{"name": g.name, "family": g.family.value, "columns": list(g.columns)}
                         for g in cfg.groups]
    out["clustering"] = dataclasses.asdict(cfg.clustering)
    if cfg.simulation is not None:
        s = cfg.simulation
        out["simulation"] = {
            "replications": s.replications, "groups": s.groups, "obs": s.obs,
            "dim_min": s.dim_range[0], "dim_max": s.dim_range[1],
            "seed": s.seed, "n_jobs": s.n_jobs,
        }
    out["io"] = {k: v for k, v in dataclasses.asdict(cfg.io).items() if v is not None}
    return out


def write_config(cfg: RunConfig, path) -> None:
    with Path(path).open("wb") as fh:
        tomli_w.dump(config_to_dict(cfg), fh)


# ----------------------------------------------------------------------------
# sample store
# ----------------------------------------------------------------------------

_CHAIN_HEADER = ["scan", "group", "gamma", "psi", "natural", "nu", "xi", "tau", "alpha", "beta"]


def write_store(store: SampleStore, directory) -> list:
    """One ``chain_<k>.csv`` per chain plus ``store.toml`` with group metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "groups": [
            {"name": n, "family": f.value, "lower": b.lower, "upper": b.upper}
            for n, f, b in zip(store.names, store.families, store.bounds)
        ],
        "chains": [
            {"file": f"chain_{k + 1}.csv", "acceptance": {key: float(v) for key, v in c.acceptance.items()}}
            for k, c in enumerate(store.chains)
        ],
        "has_nu": any(c.nu is not None for c in store.chains),
    }
    with (directory / "store.toml").open("wb") as fh:
        tomli_w.dump(meta, fh)
    paths = []
    for k, c in enumerate(store.chains):
        psi = np.column_stack([psi_from_gamma(c.gamma[:, i], store.bounds[i]) for i in range(store.m)]) \
            if len(c) else np.empty((0, store.m))
        nat = np.column_stack([_natural_draws(store.families[i], psi[:, i]) for i in range(store.m)]) \
            if len(c) else psi
        path = directory / f"chain_{k + 1}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(_CHAIN_HEADER)
            for t in range(len(c)):
                for i in range(store.m):
                    nu = ""
                    if c.nu is not None and store.families[i] is Family.STUDENT_T:
                        nu = str(int(c.nu[t, i]))
                    w.writerow([int(c.scan[t]), store.names[i], _fmt(c.gamma[t, i]), _fmt(psi[t, i]),
                                _fmt(nat[t, i]), nu, _fmt(c.xi[t]), _fmt(c.tau[t]),
                                _fmt(c.alpha[t, i]), _fmt(c.beta[t, i])])
        paths.append(path)
    return paths


def read_store(directory) -> SampleStore:
    directory = Path(directory)
    meta_path = directory / "store.toml"
    if not meta_path.is_file():
        raise DataError(f"no sample store metadata at {meta_path}")
    with meta_path.open("rb") as fh:
        meta = tomli.load(fh)
    names = [g["name"] for g in meta["groups"]]
    families = [Family.parse(g["family"]) for g in meta["groups"]]
    bounds = [ParamBounds(g["lower"], g["upper"]) for g in meta["groups"]]
    m = len(names)
    index = {n: i for i, n in enumerate(names)}
    chains = []
    for ch in meta["chains"]:
        path = directory / ch["file"]
        if not path.is_file():
            raise DataError(f"missing chain file {path}")
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != _CHAIN_HEADER:
            raise DataError(f"{path}:1: unexpected header")
        body = rows[1:]
        if len(body) % m:
            raise DataError(f"{path}: {len(body)} rows is not a multiple of {m} groups")
        n = len(body) // m
        scan = np.empty(n, dtype=np.int64)
        gamma, alpha, beta = (np.empty((n, m)) for _ in range(3))
        nu = np.zeros((n, m), dtype=np.int64)
        xi, tau = np.empty(n), np.empty(n)
        try:
            for r, row in enumerate(body):
                t, i = divmod(r, m)
                if index.get(row[1]) != i:
                    raise DataError(f"{path}:{r + 2}: expected group {names[i]!r}, got {row[1]!r}")
                scan[t] = int(row[0])
                gamma[t, i] = float(row[2])
                if row[5]:
                    nu[t, i] = int(row[5])
                xi[t] = float(row[6])
                tau[t] = float(row[7])
                alpha[t, i] = float(row[8])
                beta[t, i] = float(row[9])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{r + 2}: {exc}") from None
        chains.append(ChainDraws(scan, gamma, xi, tau, alpha, beta,
                                 nu if meta["has_nu"] else None, dict(ch.get("acceptance", {}))))
    return SampleStore(families, bounds, names, chains)


# ----------------------------------------------------------------------------
# summaries and reports
# ----------------------------------------------------------------------------

_SPACES = ("natural", "gamma", "psi")
_STAT_FIELDS = ("mean", "sd", "lower", "upper")
_SUMMARY_HEADER = (["group", "family", "n_draws", "ess", "nu_mode", "nu_freq"]
                   + [f"{s}_{f}" for s in _SPACES for f in _STAT_FIELDS])


def write_summary(summary: PosteriorSummary, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SUMMARY_HEADER)
        for g in summary.groups:
            freq = ";".join(f"{k}:{v}" for k, v in sorted(g.nu_freq.items())) if g.nu_freq else ""
            row = [g.name, g.family.value, summary.n_draws, _fmt(g.ess),
                   "" if g.nu_mode is None else g.nu_mode, freq]
            for s in _SPACES:
                st = getattr(g, s)
                row += [_fmt(getattr(st, f)) for f in _STAT_FIELDS]
            w.writerow(row)


def read_summary(path) -> PosteriorSummary:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != _SUMMARY_HEADER:
        raise DataError(f"{path}:1: unexpected summary header")
    groups, n_draws = [], 0
    for line, row in enumerate(rows[1:], start=2):
        try:
            rec = dict(zip(_SUMMARY_HEADER, row))
            n_draws = int(rec["n_draws"])
            stats = {s: Stats(*(float(rec[f"{s}_{f}"]) for f in _STAT_FIELDS)) for s in _SPACES}
            freq = None
            if rec["nu_freq"]:
                freq = {int(k): int(v) for k, v in (p.split(":") for p in rec["nu_freq"].split(";"))}
            groups.append(GroupSummary(
                name=rec["group"], family=Family.parse(rec["family"]),
                gamma=stats["gamma"], psi=stats["psi"], natural=stats["natural"],
                ess=float(rec["ess"]),
                nu_mode=int(rec["nu_mode"]) if rec["nu_mode"] else None, nu_freq=freq))
        except (ValueError, KeyError) as exc:
            raise DataError(f"{path}:{line}: {exc}") from None
    return PosteriorSummary(groups=groups, acceptance=[], n_draws=n_draws)


def format_table(headers, rows) -> str:
    """Plain aligned text table; floats at 6 significant digits."""
    cells = [[_g6(c) if isinstance(c, float) else ("-" if c is None else str(c)) for c in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[j]) for r in cells)) if cells else len(str(h))
              for j, h in enumerate(headers)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(headers, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def format_summary(summary: PosteriorSummary) -> str:
    headers = ["group", "family", "mean", "sd", "2.5%", "97.5%", "ess", "nu"]
    rows = [[g.name, g.family.value, g.natural.mean, g.natural.sd, g.natural.lower,
             g.natural.upper, g.ess, g.nu_mode] for g in summary.groups]
    return format_table(headers, rows)


def write_mse_report(report: MseReport, path) -> None:
    """Two rows (Bayes, MLE); columns group 1..m then the row mean."""
    m = len(report.bayes)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method"] + [f"group{i + 1}" for i in range(m)] + ["mean"])
        w.writerow(["Bayes"] + [_fmt(x) for x in report.bayes] + [_fmt(report.bayes_mean)])
        w.writerow(["MLE"] + [_fmt(x) for x in report.mle] + [_fmt(report.mle_mean)])


def read_mse_report(path) -> MseReport:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != 3 or [r[0] for r in rows[1:]] != ["Bayes", "MLE"]:
        raise DataError(f"{path}: expected header plus Bayes and MLE rows")
    try:
        bayes = np.array([float(x) for x in rows[1][1:-1]])
        mle = np.array([float(x) for x in rows[2][1:-1]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return MseReport(bayes=bayes, mle=mle)


def format_mse_report(report: MseReport) -> str:
    m = len(report.bayes)
    headers = [""] + [f"group {i + 1}" for i in range(m)] + ["mean"]
    rows = [["Bayes"] + [float(x) for x in report.bayes] + [report.bayes_mean],
            ["MLE"] + [float(x) for x in report.mle] + [report.mle_mean]]
    return format_table(headers, rows)


# ----------------------------------------------------------------------------
# clustering artifacts
# ----------------------------------------------------------------------------

def write_dissimilarity(D: DissimilarityMatrix, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(D.labels)
        for row in D.values:
            w.writerow([_fmt(x) for x in row])


def read_dissimilarity(path) -> DissimilarityMatrix:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dissimilarity file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    labels = rows[0]
    body = rows[1:]
    if len(body) != len(labels) or any(len(r) != len(labels) for r in body):
        raise DataError(f"{path}: expected a {len(labels)} x {len(labels)} matrix")
    try:
        values = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return DissimilarityMatrix(values, labels)


def write_partition(partition: ClusterPartition, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "cluster_id"])
        for cid, members in enumerate(partition.clusters, start=1):
            for lab in members:
                w.writerow([lab, cid])


def read_partition(path, max_size: int = 10) -> ClusterPartition:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["label", "cluster_id"]:
        raise DataError(f"{path}:1: expected header label,cluster_id")
    clusters = {}
    for line, row in enumerate(rows[1:], start=2):
        try:
            clusters.setdefault(int(row[1]), []).append(row[0])
        except (ValueError, IndexError):
            raise DataError(f"{path}:{line}: malformed row {row!r}") from None
    return ClusterPartition([clusters[k] for k in sorted(clusters)], max_size)


def write_tail_summary(summaries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "mean", "sd", "lower", "upper"])
        for s in summaries:
            w.writerow([s.name] + [_fmt(getattr(s.stats, f)) for f in _STAT_FIELDS])


def format_tail_summary(summaries) -> str:
    rows = [[s.name, s.stats.mean, s.stats.sd, s.stats.lower, s.stats.upper] for s in summaries]
    return format_table(["group", "mean", "sd", "2.5%", "97.5%"], rows)


def default_threads() -> int:
    """Worker count from ``HIERCOP_THREADS`` (default 1)."""
    raw = os.environ.get("HIERCOP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HIERCOP_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"HIERCOP_THREADS must be >= 1, got {n}")
    return n
