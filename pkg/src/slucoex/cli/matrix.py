"""Scenario grids: run every (users, scheme, seed) cell and collect CSV rows."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

from ..config import RL_SCHEMES, SCHEMES, USER_GRID, ConfigError, RunConfig
from ..sim.world import MetricsReport, World, run as sim_run
from .config_io import convert, parse_pairs

log = logging.getLogger("slucoex")


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    m: int
    n: int
    seed: int
    prr_slu: float
    prr_total: float
    throughput_bps: float  # SL-U goodput
    jain: float
    mean_utility: float
    collisions: int
    prr_wifi: float
    throughput_wifi_bps: float
    throughput_total_bps: float

    @classmethod
    def from_report(cls, r: MetricsReport) -> "ResultRow":
        return cls(r.scheme, r.m, r.n, r.seed, r.prr_slu, r.prr_total, r.throughput_slu_bps, r.jain,
                   r.mean_utility, r.collisions, r.prr_wifi, r.throughput_wifi_bps, r.throughput_total_bps)


CSV_HEADER = tuple(f.name for f in fields(ResultRow))


@dataclass(frozen=True)
class Grid:
    schemes: tuple = ("ccha",)
    users: tuple = USER_GRID
    seeds: tuple = (1,)
    base: RunConfig = RunConfig()

    def __post_init__(self):
        if not (self.schemes and self.users and self.seeds):
            raise ConfigError("grid must have at least one scheme, user count and seed")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; valid: {', '.join(SCHEMES)}")

    def cells(self) -> list[RunConfig]:
        """Cells in output order: user counts, then schemes, then seeds."""
        return [self.base.replace(scheme=s, m_pairs=m, n_wifi=n, seed=seed)
                for m, n in self.users for s in self.schemes for seed in self.seeds]


def _int_list(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:  # inclusive range; seeds are non-negative
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _users(text: str) -> tuple[tuple[int, int], ...]:
    cells = []
    for part in text.split(","):
        part = part.strip().lower()
        if part:
            m, _, n = part.partition("x")
            cells.append((int(m), int(n or m)))
    return tuple(cells)


def parse_grid(path: str | os.PathLike, overrides: Optional[dict] = None) -> Grid:
    """Read a grid file: ``schemes``, ``users`` (``MxN`` list) and ``seeds`` (list or ``a-b``), plus
    any config key, which applies to every cell."""
    with open(path, encoding="utf-8") as fh:
        raw = parse_pairs(fh.read(), str(path))
    raw.update(overrides or {})
    try:
        schemes = tuple(s.strip() for s in raw.pop("schemes", "ccha").split(",") if s.strip())
        users = _users(raw.pop("users", ",".join(f"{m}x{n}" for m, n in USER_GRID)))
        seeds = _int_list(raw.pop("seeds", "1"))
    except ValueError as exc:
        raise ConfigError(f"malformed grid file {path}: {exc}") from exc
    base = RunConfig(**{k: convert(k, v) for k, v in raw.items()})
    return Grid(schemes, users, seeds, base)


def checkpoint_path(csv_path: str | os.PathLike, cfg: RunConfig) -> Path:
    p = Path(csv_path)
    return p.with_name(f"{p.stem}.{cfg.scheme}_m{cfg.m_pairs}_n{cfg.n_wifi}_s{cfg.seed}.qnet")


def run_cell(cfg: RunConfig, checkpoint: Optional[str | os.PathLike] = None) -> MetricsReport:
    """Simulate one cell. RL schemes are trained first, then evaluated greedily on fresh traffic."""
    if cfg.scheme not in RL_SCHEMES:
        return sim_run(cfg)
    from ..rl import checkpoint as ckpt
    from ..rl.agent import GreedyPolicy, train
    world = World(cfg)
    agent = train(cfg, topo=world.topo, log=log.debug)
    if checkpoint is not None:
        ckpt.save(checkpoint, agent.networks())
    world.policy = GreedyPolicy(agent.snapshot(), agent.act, cfg.power_grid())
    return world.run()


def _run_indexed(args) -> ResultRow:
    cfg, ck = args
    log.info("cell %s m=%d n=%d seed=%d", cfg.scheme, cfg.m_pairs, cfg.n_wifi, cfg.seed)
    return ResultRow.from_report(run_cell(cfg, ck))


def run_matrix(grid: Grid | Sequence[RunConfig], out: Optional[str | os.PathLike] = None,
               jobs: int = 1) -> list[ResultRow]:
    """Run every cell and optionally write the CSV (plus one checkpoint per RL cell).

    Each cell derives all randomness from its own config, so the rows do not
    depend on execution order or on ``jobs``.
    """
    cells = grid.cells() if isinstance(grid, Grid) else list(grid)
    if not cells:
        raise ConfigError("empty grid")
    work = [(c, checkpoint_path(out, c) if out is not None and c.scheme in RL_SCHEMES else None) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_run_indexed, work))
    else:
        rows = [_run_indexed(w) for w in work]
    if out is not None:
        Path(out).write_text(rows_to_csv(rows), encoding="utf-8")
    return rows


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])
    return buf.getvalue()


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
