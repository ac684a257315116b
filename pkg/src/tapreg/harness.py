"""Experiment sweeps: configs, records, CSV/SVG outputs.

The record CSV schema is versioned by a leading comment line; rows are
emitted in deterministic (alpha, delta, p, trial) order with all randomness
pre-keyed per trial, so reruns are byte-identical in every column except
the measured wall_ms timing, regardless of thread count.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .concavity import scan_nonconcavity
from .model import ModelParams, fmt17, generate_instance
from .oracle import gaussian_log_partition, ridge_solve, tap_ridge_distance
from .rs import solve_fixed_point
from .solver import SolverOptions, maximize_tap, profile_over_q
from .tap import f_tap

__all__ = [
    "CSV_VERSION_COMMENT",
    "RECORD_FIELDS",
    "EXPERIMENTS",
    "THREADS_ENV_VAR",
    "ExperimentConfig",
    "ExperimentRecord",
    "OutputFiles",
    "preset",
    "PRESET_NAMES",
    "run_experiment",
    "write_outputs",
    "svg_line_chart",
]

CSV_VERSION_COMMENT = "# tapreg-csv-v1"
RECORD_FIELDS = (
    "experiment",
    "p",
    "n",
    "alpha",
    "delta",
    "trial",
    "seed",
    "dist_sq_norm",
    "f_tap_max",
    "f_tap_ridge",
    "gauss_free_energy",
    "rs_free_energy",
    "iterations",
    "converged",
    "wall_ms",
    "status",
)
EXPERIMENTS = ("corollary1", "free-energy", "rs-table", "concavity", "profile")
_INSTANCE_EXPERIMENTS = ("corollary1", "free-energy", "concavity", "profile")
THREADS_ENV_VAR = "TAPREG_THREADS"


@dataclass
class ExperimentRecord:
    """One CSV row; metrics a given experiment does not produce stay None."""

    experiment: str
    p: int | None = None
    n: int | None = None
    alpha: float | None = None
    delta: float | None = None
    trial: int | None = None
    seed: int | None = None
    dist_sq_norm: float | None = None
    f_tap_max: float | None = None
    f_tap_ridge: float | None = None
    gauss_free_energy: float | None = None
    rs_free_energy: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    wall_ms: float | None = None
    status: str = "ok"
    table_rows: list | None = field(default=None, repr=False, compare=False)  # not serialized


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(value)
    return (value,)


@dataclass
class ExperimentConfig:
    experiment: str
    alpha: float | tuple = 2.0
    delta: float | tuple = 0.5
    p_list: tuple | None = None
    trials: int = 1
    master_seed: int = 0
    optimizer: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    q_grid: tuple | None = None
    out: str | None = None
    plot: str | None = None
    table_out: str | None = None
    threads: int = 1

    def alphas(self) -> tuple:
        return tuple(float(a) for a in _as_tuple(self.alpha))

    def deltas(self) -> tuple:
        return tuple(float(d) for d in _as_tuple(self.delta))

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for a in self.alphas():
            if not (np.isfinite(a) and a > 0):
                raise ValueError(f"alpha values must be positive, got {a!r}")
        for d in self.deltas():
            if not (np.isfinite(d) and d > 0):
                raise ValueError(f"delta values must be positive, got {d!r}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError(f"trials must be an integer >= 1, got {self.trials!r}")
        if not (isinstance(self.threads, int) and self.threads >= 1):
            raise ValueError(f"threads must be an integer >= 1, got {self.threads!r}")
        if self.experiment in _INSTANCE_EXPERIMENTS:
            if not self.p_list:
                raise ValueError(f"experiment {self.experiment!r} needs a non-empty p_list")
            for p in self.p_list:
                if not (isinstance(p, (int, np.integer)) and p >= 1):
                    raise ValueError(f"p_list entries must be positive integers, got {p!r}")
        if self.q_grid is not None:
            for q in self.q_grid:
                if not 0.0 <= float(q) < 1.0:
                    raise ValueError(f"q_grid entries must lie in [0, 1), got {q!r}")
        try:
            SolverOptions(**self.optimizer)  # reject unknown/invalid optimizer options early
        except TypeError as exc:
            raise ValueError(f"bad optimizer options: {exc}") from exc
        bad_mc = set(self.mc) - {"samples", "stream_tag"}
        if bad_mc:
            raise ValueError(f"unknown mc options: {sorted(bad_mc)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        if cfg.p_list is not None:
            cfg.p_list = tuple(int(p) for p in cfg.p_list)
        if cfg.q_grid is not None:
            cfg.q_grid = tuple(float(q) for q in cfg.q_grid)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValueError("config JSON must be an object")
        return cls.from_dict(doc)


PRESET_NAMES = ("figure1",)


def preset(name: str, **overrides) -> ExperimentConfig:
    """Named experiment presets; overrides replace individual fields."""
    if name == "figure1":
        base = dict(
            experiment="corollary1",
            alpha=2.0,
            delta=(0.1, 0.5),
            p_list=tuple(range(10, 401, 10)),
            trials=10,
            master_seed=0,
        )
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


# ---------------------------------------------------------------------------
# Running

def _solve_row(config: ExperimentConfig, alpha: float, delta: float, p: int, trial: int) -> ExperimentRecord:
    record = ExperimentRecord(
        experiment=config.experiment,
        p=p,
        alpha=alpha,
        delta=delta,
        trial=trial,
        seed=config.master_seed,
    )
    start = time.perf_counter()
    try:
        params = ModelParams(p=p, alpha=alpha, delta=delta, master_seed=config.master_seed)
        record.n = params.n
        instance = generate_instance(params, stream_tag=(p, trial))
        if config.experiment in ("corollary1", "free-energy"):
            ridge = ridge_solve(instance)
            record.f_tap_ridge = f_tap(ridge.a_delta, instance).value
            opt = maximize_tap(instance, opts=SolverOptions(**config.optimizer))
            record.f_tap_max = opt.f_value
            record.iterations = opt.iterations
            record.converged = opt.converged
            record.dist_sq_norm = tap_ridge_distance(opt.a_hat, ridge.a_delta)
            record.gauss_free_energy = gaussian_log_partition(instance).value
            record.rs_free_energy = solve_fixed_point(alpha, delta).free_energy
        elif config.experiment == "concavity":
            reports = scan_nonconcavity(instance, params, config.q_grid)
            record.table_rows = [
                (r.q, r.lambda_min, r.finite_p_value, r.asymptotic_value, r.nonconcave)
                for r in reports
            ]
        elif config.experiment == "profile":
            points = profile_over_q(instance, params, config.q_grid)
            record.table_rows = [(pt.q, pt.g_tap, pt.g) for pt in points]
    except Exception as exc:  # noqa: BLE001 - row-level failures must not abort the sweep
        record.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    record.wall_ms = (time.perf_counter() - start) * 1000.0
    return record


def _rs_table_row(config: ExperimentConfig, alpha: float, delta: float) -> ExperimentRecord:
    record = ExperimentRecord(
        experiment=config.experiment, alpha=alpha, delta=delta, trial=0, seed=config.master_seed
    )
    start = time.perf_counter()
    try:
        record.rs_free_energy = solve_fixed_point(alpha, delta).free_energy
    except Exception as exc:  # noqa: BLE001
        record.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    record.wall_ms = (time.perf_counter() - start) * 1000.0
    return record


def _thread_count(config: ExperimentConfig) -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
        if value < 1:
            raise ValueError(f"{THREADS_ENV_VAR} must be >= 1, got {value}")
        return value
    return config.threads


def run_experiment(config: ExperimentConfig) -> list[ExperimentRecord]:
    """Run the sweep described by config and return one record per row.

    Rows are computed under a thread pool (row order is fixed up front and
    assembled after the pool drains) and never abort the sweep: failures are
    recorded in the row's status column.
    """
    config.validate()
    if config.experiment == "rs-table":
        tasks = [(a, d) for a in config.alphas() for d in config.deltas()]
        worker = lambda t: _rs_table_row(config, *t)  # noqa: E731
    else:
        tasks = [
            (a, d, p, t)
            for a in config.alphas()
            for d in config.deltas()
            for p in config.p_list
            for t in range(config.trials)
        ]
        worker = lambda t: _solve_row(config, *t)  # noqa: E731

    threads = _thread_count(config)
    if threads == 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))


# ---------------------------------------------------------------------------
# Writing

@dataclass(frozen=True)
class OutputFiles:
    csv_path: str
    svg_path: str | None = None
    table_path: str | None = None


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt17(value)
    return str(value)


def _records_csv(records) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION_COMMENT + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for rec in records:
        writer.writerow([_cell(getattr(rec, name)) for name in RECORD_FIELDS])
    return buf.getvalue()


_TABLE_HEADERS = {
    "rs-table": ("alpha", "delta", "E_delta", "sigma_sq", "free_energy"),
    "concavity": ("q", "lambda_min", "finite_p", "asymptotic", "nonconcave"),
    "profile": ("q", "g_tap", "g"),
}


def _table_csv(records, experiment: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_TABLE_HEADERS[experiment])
    for rec in records:
        if rec.status != "ok":
            continue
        if experiment == "rs-table":
            sol = solve_fixed_point(rec.alpha, rec.delta)
            writer.writerow(
                [_cell(v) for v in (rec.alpha, rec.delta, sol.e_delta, sol.sigma_sq, sol.free_energy)]
            )
        else:
            for row in rec.table_rows or ():
                writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_outputs(records, config: ExperimentConfig) -> OutputFiles:
    """Write the record CSV (plus SVG chart / dedicated table when requested).

    The writer is pure: the bytes depend only on records and config.  If the
    CSV path is unwritable the records are echoed to standard output before
    the error propagates, so a sweep is never silently lost.
    """
    if not records:
        raise ValueError("no records to write")
    if not config.out:
        raise ValueError("config.out must name the CSV output path")

    csv_text = _records_csv(records)
    try:
        Path(config.out).write_text(csv_text, encoding="utf-8")
    except OSError:
        print(csv_text, end="")
        raise

    svg_path = None
    if config.plot:
        series = _distance_series(records)
        svg_text = svg_line_chart(
            series,
            title="Mean normalized TAP-ridge distance",
            xlabel="p",
            ylabel="mean dist_sq_norm",
        )
        Path(config.plot).write_text(svg_text, encoding="utf-8")
        svg_path = config.plot

    table_path = None
    if config.experiment in _TABLE_HEADERS:
        table_path = config.table_out or str(Path(config.out).with_suffix(".table.csv"))
        Path(table_path).write_text(_table_csv(records, config.experiment), encoding="utf-8")

    return OutputFiles(csv_path=config.out, svg_path=svg_path, table_path=table_path)


def _distance_series(records) -> list:
    """Mean dist_sq_norm vs p, one series per delta (skips failed rows)."""
    sums: dict = {}
    for rec in records:
        if rec.status != "ok" or rec.dist_sq_norm is None:
            continue
        total, count = sums.setdefault(rec.delta, {}).setdefault(rec.p, (0.0, 0))
        sums[rec.delta][rec.p] = (total + rec.dist_sq_norm, count + 1)
    series = []
    for delta in sorted(sums):
        points = [(p, total / count) for p, (total, count) in sorted(sums[delta].items())]
        series.append((f"delta={delta:g}", points))
    if not series:
        raise ValueError("no successful rows with dist_sq_norm to plot")
    return series


_PALETTE = ("#1f6fb4", "#d95f02", "#2a9d5c", "#9467bd", "#8c564b", "#17a2b8")


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def svg_line_chart(series, title: str, xlabel: str, ylabel: str) -> str:
    """Minimal hand-emitted SVG line chart: axes, ticks, one polyline per series."""
    width, height = 640, 420
    ml, mr, mt, mb = 72, 24, 44, 56
    plot_w, plot_h = width - ml - mr, height - mt - mb

    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(x: float) -> float:
        return ml + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return mt + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{title}</text>',
    ]
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        out.append(
            f'<line x1="{px:.2f}" y1="{mt + plot_h:.2f}" x2="{px:.2f}" y2="{mt + plot_h + 5:.2f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{mt + plot_h + 20:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.6g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        out.append(f'<line x1="{ml - 5:.2f}" y1="{py:.2f}" x2="{ml:.2f}" y2="{py:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{ml - 9:.2f}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.6g}</text>'
        )
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="{ml + plot_w / 2:.1f}" y="{height - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="20" y="{mt + plot_h / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 20 {mt + plot_h / 2:.1f})">{ylabel}</text>'
    )
    for i, (label, pts) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = mt + 16 + 18 * i
        out.append(
            f'<line x1="{ml + plot_w - 150:.1f}" y1="{ly}" x2="{ml + plot_w - 122:.1f}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{ml + plot_w - 116:.1f}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
