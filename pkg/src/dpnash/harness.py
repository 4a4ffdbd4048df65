"""Run configs, bundled presets, multi-seed experiments and summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .game import GameSpec, game_from_dict, game_to_dict, solve_ne_oracle
from .graphs import GraphSchedule, parse_topology, schedule_from_edge_lists
from .privacy import Convention, PrivacyLedger, ledger_for_run
from .schedules import ScheduleSet
from .seeker import RunRecord, WeightUnderflow, check_preconditions, run

__all__ = ["RunConfig", "ConfigError", "load_config", "write_config", "config_from_dict",
           "preset_names", "run_experiment", "ExperimentResult", "summarize",
           "SummaryTable", "SummaryRow", "density_report", "DensityStats",
           "first_crossing", "run_columns", "PRIVACY_COLUMNS"]

log = logging.getLogger(__name__)

PRIVACY_COLUMNS = ("iter", "delta", "b_hat", "budget", "epsilon_cum")
NOISE_MODES = ("on", "zero-noise")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _data(*parts) -> resources.abc.Traversable:
    return resources.files("dpnash").joinpath("data", *parts)


def preset_names(kind: str = "configs") -> list[str]:
    suffix = ".txt" if kind == "topologies" else ".json"
    return sorted(p.name[: -len(suffix)] for p in _data(kind).iterdir()
                  if p.name.endswith(suffix))


@dataclass
class RunConfig:
    """Fully expanded run description (no file references left)."""

    name: str
    game: dict
    topology: dict
    schedules: dict
    horizon: int
    seeds: list = field(default_factory=lambda: [0])
    q0: float | list = 0.1
    noise: str = "on"
    convention: str = "empirical"
    m3: float = 1.0
    threshold: float = 0.5
    out: str | None = None

    def __post_init__(self):
        if not isinstance(self.horizon, int) or isinstance(self.horizon, bool) or self.horizon < 1:
            raise ConfigError(f"horizon: must be an integer >= 1, got {self.horizon!r}")
        if not (isinstance(self.threshold, (int, float)) and self.threshold > 0):
            raise ConfigError(f"threshold: must be positive, got {self.threshold!r}")
        if self.noise not in NOISE_MODES:
            raise ConfigError(f"noise: expected one of {NOISE_MODES}, got {self.noise!r}")
        try:
            Convention(self.convention)
        except ValueError:
            raise ConfigError(f"convention: expected 'theoretical' or 'empirical', "
                              f"got {self.convention!r}") from None
        if not self.seeds or not all(isinstance(s, int) for s in self.seeds):
            raise ConfigError(f"seeds: expected a non-empty list of integers, got {self.seeds!r}")

    @property
    def zero_noise(self) -> bool:
        return self.noise == "zero-noise"

    def game_spec(self) -> GameSpec:
        try:
            return game_from_dict(self.game)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"game: {exc}") from None

    def graph_schedule(self) -> GraphSchedule:
        t = self.topology
        try:
            return schedule_from_edge_lists(t["n"], t["graphs"], t["D"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"topology: {exc}") from None

    def schedule_set(self) -> ScheduleSet:
        try:
            return ScheduleSet.from_dict(self.schedules, len(self.game["players"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"schedules: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


def _topology_to_dict(s: GraphSchedule) -> dict:
    return {"n": s.n, "period": s.period, "D": s.d_window,
            "graphs": [sorted([j, i] for j, i in g.edges) for g in s.graphs]}


def _resolve_game(ref, base: Path) -> dict:
    if isinstance(ref, dict):
        return ref
    if not isinstance(ref, str):
        raise ConfigError(f"game: expected a preset name, path or object, got {ref!r}")
    path = base / ref
    if path.is_file():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    res = _data("games", ref + ".json")
    if res.is_file():
        return json.loads(res.read_text())
    raise ConfigError(f"game: no file or preset named {ref!r} "
                      f"(presets: {', '.join(preset_names('games'))})")


def _resolve_topology(ref, base: Path) -> dict:
    if isinstance(ref, dict):
        return ref
    if not isinstance(ref, str):
        raise ConfigError(f"topology: expected a preset name, path or object, got {ref!r}")
    path = base / ref
    if path.is_file():
        return _topology_to_dict(parse_topology(path.read_text(), source=str(path)))
    res = _data("topologies", ref + ".txt")
    if res.is_file():
        return _topology_to_dict(parse_topology(res.read_text(), source=f"preset:{ref}"))
    raise ConfigError(f"topology: no file or preset named {ref!r} "
                      f"(presets: {', '.join(preset_names('topologies'))})")


_KNOWN = {"name", "game", "topology", "schedules", "horizon", "seeds", "seed", "q0",
          "noise", "convention", "m3", "threshold", "out"}


def config_from_dict(d: dict, base: Path | str = ".", name: str = "") -> RunConfig:
    """Validate a raw config mapping and expand every preset/file reference."""
    if not isinstance(d, dict):
        raise ConfigError("config root must be an object")
    unknown = set(d) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    for key in ("game", "topology", "schedules", "horizon"):
        if key not in d:
            raise ConfigError(f"{key}: required field is missing")
    base = Path(base)
    seeds = d.get("seeds", [d["seed"]] if "seed" in d else [0])
    cfg = RunConfig(
        name=d.get("name", name),
        game=_resolve_game(d["game"], base),
        topology=_resolve_topology(d["topology"], base),
        schedules=d["schedules"],
        horizon=d["horizon"],
        seeds=list(seeds),
        q0=d.get("q0", 0.1),
        noise=d.get("noise", "on"),
        convention=d.get("convention", "empirical"),
        m3=d.get("m3", 1.0),
        threshold=d.get("threshold", 0.5),
        out=d.get("out"),
    )
    # surface bad payloads now rather than mid-run
    spec = cfg.game_spec()
    graphs = cfg.graph_schedule()
    cfg.schedule_set()
    if graphs.n != spec.n:
        raise ConfigError(f"topology has {graphs.n} nodes but the game has {spec.n} players")
    return cfg


def load_config(path) -> RunConfig:
    """Read a JSON run config, or expand a bundled preset by name."""
    p = Path(path)
    if p.is_file():
        text, base, name = p.read_text(), p.parent, p.stem
    else:
        res = _data("configs", f"{path}.json")
        if not res.is_file():
            raise ConfigError(f"no config file {str(path)!r} and no preset of that name "
                              f"(presets: {', '.join(preset_names())})")
        text, base, name = res.read_text(), Path("."), str(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(raw, base=base, name=name)


def write_config(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    return path


# -- experiments --------------------------------------------------------------

def first_crossing(err, threshold: float) -> int | None:
    """Index of the first entry strictly below ``threshold``, or None."""
    below = np.flatnonzero(np.asarray(err) < threshold)
    return int(below[0]) if below.size else None


@dataclass
class SummaryRow:
    scenario: str
    seeds: list
    crossings: list
    reached: int
    crossing_median: float | None
    crossing_min: int | None
    crossing_max: int | None
    budget_at_crossing: float | None
    final_error_median: float
    final_error_max: float


@dataclass
class SummaryTable:
    threshold: float
    rows: list

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "rows": [asdict(r) for r in self.rows]}

    def format(self) -> str:
        out = [f"{'scenario':<22}{'reached':>9}{'median':>9}{'min':>6}{'max':>6}"
               f"{'budget@cross':>15}{'final err':>12}"]
        for r in self.rows:
            def f(v, spec):
                width = spec.split(".")[0].rstrip("dfe")
                return format("-", f">{width}") if v is None else format(v, spec)
            out.append(f"{r.scenario:<22}{r.reached:>4}/{len(r.seeds):<4}"
                       f"{f(r.crossing_median, '9.1f')}{f(r.crossing_min, '6d')}"
                       f"{f(r.crossing_max, '6d')}{f(r.budget_at_crossing, '15.4e')}"
                       f"{r.final_error_median:12.4g}")
        return "\n".join(out)


def summarize(records, threshold: float = 0.5, ledgers=None, scenario: str = "") -> SummaryTable:
    """Iterations-to-threshold statistics across seeds.

    ``budget_at_crossing`` is the median over seeds of the per-iteration
    budget at each seed's crossing iteration (``ledgers`` aligned with
    ``records``).
    """
    records = list(records)
    if not records:
        raise ValueError("need at least one record")
    if any(r.err is None for r in records):
        raise ValueError("records must carry errors (run with q_star)")
    crossings = [first_crossing(r.err, threshold) for r in records]
    hits = [c for c in crossings if c is not None]
    budgets = []
    if ledgers is not None:
        for c, led in zip(crossings, ledgers):
            if c is not None and c >= 1:
                budgets.append(led.budget_at(c))
    finals = [float(r.err[-1]) for r in records]
    row = SummaryRow(
        scenario=scenario,
        seeds=[r.seed for r in records],
        crossings=crossings,
        reached=len(hits),
        crossing_median=float(np.median(hits)) if hits else None,
        crossing_min=min(hits) if hits else None,
        crossing_max=max(hits) if hits else None,
        budget_at_crossing=float(np.median(budgets)) if budgets else None,
        final_error_median=float(np.median(finals)),
        final_error_max=float(max(finals)),
    )
    return SummaryTable(threshold, [row])


@dataclass
class DensityStats:
    per_phase: list
    min: float
    max: float


def density_report(s: GraphSchedule) -> DensityStats:
    """Edges per phase over ``n(n-1)``; self-loops never count."""
    n = s.n
    denom = n * (n - 1)
    dens = [len(g.edges) / denom if denom else 0.0 for g in s.graphs]
    return DensityStats(dens, min(dens), max(dens))


def run_columns(n: int) -> list[str]:
    return (["iter"] + [f"q_{i}" for i in range(1, n + 1)]
            + [f"y_{i}" for i in range(1, n + 1)]
            + ["err", "delta", "budget", "epsilon_cum"])


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _run_csv(rec: RunRecord, ledger: PrivacyLedger) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(run_columns(rec.n))
    for l in range(rec.horizon + 1):
        if l == 0:
            priv = [None, None, 0.0]
        else:
            k = l - 1
            priv = [ledger.delta[k], ledger.budget[k], ledger.epsilon[k]]
        err = None if rec.err is None else rec.err[l]
        w.writerow([l] + [_fmt(v) for v in rec.q[l]] + [_fmt(v) for v in rec.y[l]]
                   + [_fmt(err)] + [_fmt(v) for v in priv])
    return buf.getvalue()


def _privacy_csv(ledger: PrivacyLedger) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PRIVACY_COLUMNS)
    w.writerow([0, "", "", "", _fmt(0.0)])
    for row in ledger.rows():
        w.writerow([row[0]] + [_fmt(v) for v in row[1:]])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    config: RunConfig
    q_star: np.ndarray
    records: list
    ledgers: dict  # convention -> list of ledgers aligned with records
    summary: SummaryTable
    files: list
    complete: bool = True


def run_experiment(cfg: RunConfig, out_dir=None, workers: int | None = None,
                   assume_valid: bool = False) -> ExperimentResult:
    """Run every seed, then write CSVs, the summary and the oracle solution.

    Files written to ``out_dir`` (default ``cfg.out``):
    ``run_seed<S>.csv``, ``privacy_seed<S>_empirical.csv``,
    ``privacy_seed<S>_theoretical.csv``, ``summary.json``, ``ne_oracle.json``
    and the expanded ``config.json``.  When a run aborts on weight
    underflow the partial records are still written and
    ``complete`` is False.
    """
    spec = cfg.game_spec()
    graphs = cfg.graph_schedule()
    sched = cfg.schedule_set()
    q_star = solve_ne_oracle(spec)
    if not assume_valid:
        # validate once here instead of once per seed
        check_preconditions(sched, graphs)

    def one(seed):
        try:
            return run(spec, sched, graphs, seed, cfg.horizon, q_star=q_star, q0=cfg.q0,
                       zero_noise=cfg.zero_noise, assume_valid=True)
        except WeightUnderflow as exc:
            log.warning("seed %d aborted: %s", seed, exc)
            return exc.record

    workers = workers or min(len(cfg.seeds), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(one, cfg.seeds))

    ledgers = {c.value: [ledger_for_run(r, spec, sched, c, cfg.m3) for r in records]
               for c in Convention}
    active = ledgers[cfg.convention]
    summary = summarize(records, cfg.threshold, active, scenario=cfg.name)

    files = []
    out = out_dir if out_dir is not None else cfg.out
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for k, rec in enumerate(records):
            p = out / f"run_seed{rec.seed}.csv"
            p.write_text(_run_csv(rec, active[k]))
            files.append(p)
            for conv in Convention:
                p = out / f"privacy_seed{rec.seed}_{conv.value}.csv"
                p.write_text(_privacy_csv(ledgers[conv.value][k]))
                files.append(p)
        p = out / "summary.json"
        p.write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
        files.append(p)
        p = out / "ne_oracle.json"
        p.write_text(json.dumps({"q_star": q_star.tolist()}, indent=2) + "\n")
        files.append(p)
        files.append(write_config(cfg, out / "config.json"))
    complete = all(r.completed for r in records)
    return ExperimentResult(cfg, q_star, records, ledgers, summary, files, complete)
