"""Command-line front end.

Subcommands: ``rankmap``, ``coverage``, ``shrinkage``, ``ellipsoid-demo``.
Settings come from flags and/or a flat key-value config file (flags win);
every run echoes its fully resolved configuration to ``config.resolved`` in
the output directory, and re-running from that file reproduces the outputs
byte for byte. Tables go to CSV, rank maps additionally to a PPM heatmap.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RngStream
from .ellipsoid import SeparationError, build_ellipsoid, ellipsoid_contains
from .experiments import (
    ENGINE_KINDS,
    SCENARIOS,
    CoverageReport,
    GridSpec,
    RankMap,
    ScenarioConfig,
    coverage_mc,
    gen_sample,
    make_engine,
    rank_map,
    shrinkage_curve,
)

__all__ = ["ConfigError", "RunConfig", "emit_csv", "main", "parse_config", "render_heatmap"]

SUBCOMMANDS = ("rankmap", "coverage", "shrinkage", "ellipsoid-demo")
_METHODS = ENGINE_KINDS + ("ellipsoid",)

_DEFAULTS = {
    "scenario": "gaussian-mixture",
    "engine": "knn",
    "n": "100",
    "m": "20",
    "q": "19",
    "trials": "10000",
    "alpha": "0.7",
    "delta": "0.05",
    "grid": "-2,2,-1,5,81",
    "seed": "0",
    "workers": "1",
    "out": "runs",
}
_KEYS = ("subcommand",) + tuple(_DEFAULTS)


class ConfigError(ValueError):
    """A configuration key failed validation; message names key, value, range."""

    def __init__(self, key, value, expected):
        super().__init__(f"invalid value for '{key}': {value!r} (expected {expected})")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    scenario: str
    engine: str
    n_values: tuple
    m: int
    q: int
    trials: int
    alpha: float
    delta: float
    grid: GridSpec
    seed: int
    workers: int
    out: str

    @property
    def n(self) -> int:
        return self.n_values[0]


def _parse_int(key, raw, lo=None, hi=None, expected=None):
    try:
        v = int(str(raw))
    except ValueError:
        raise ConfigError(key, raw, expected or "an integer") from None
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(key, raw, expected or f"an integer in [{lo}, {hi}]")
    return v


def _parse_float(key, raw, lo, hi, expected):
    try:
        v = float(str(raw))
    except ValueError:
        raise ConfigError(key, raw, expected) from None
    if not lo < v < hi:
        raise ConfigError(key, raw, expected)
    return v


def _parse_grid(raw) -> GridSpec:
    parts = str(raw).split(",")
    if len(parts) != 5:
        raise ConfigError("grid", raw, "a_min,a_max,b_min,b_max,res")
    try:
        a0, a1, b0, b1 = (float(p) for p in parts[:4])
        res = int(parts[4])
    except ValueError:
        raise ConfigError("grid", raw, "four reals and an integer resolution") from None
    if res < 1:
        raise ConfigError("grid", raw, "resolution >= 1")
    if a1 < a0 or b1 < b0:
        raise ConfigError("grid", raw, "a_min <= a_max and b_min <= b_max")
    return GridSpec(a0, a1, b0, b1, res)


def _read_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}", "lines of the form 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            raise ConfigError(key, val, f"one of {', '.join(_KEYS)}")
        values[key] = val
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankregions",
        description="Exact confidence regions for the regression function of "
        "binary classification via resampling rank tests.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    specs = {
        "rankmap": "relative-rank heatmap over a parameter grid (one shared stem)",
        "coverage": "Monte Carlo coverage of the true parameters",
        "shrinkage": "accepted grid fraction vs sample size",
        "ellipsoid-demo": "asymptotic MLE ellipsoid on one sample",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--engine", choices=_METHODS)
        p.add_argument("--n", help="sample size; comma list of increasing sizes for shrinkage")
        p.add_argument("--m", help="number of datasets compared (stem size)")
        p.add_argument("--q", help="acceptance threshold; confidence level is q/m")
        p.add_argument("--trials", help="Monte Carlo trials (repeats per size for shrinkage)")
        p.add_argument("--alpha", help="kNN neighbor-count exponent, in (0.5, 1)")
        p.add_argument("--delta", help="ellipsoid significance level, in (0, 1)")
        p.add_argument("--grid", help="a_min,a_max,b_min,b_max,res")
        p.add_argument("--seed", help="master seed")
        p.add_argument("--workers", help="worker processes (same results for any count)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="flat key=value config file; flags override it")
    return parser


def parse_config(argv) -> RunConfig:
    """Resolve argv plus optional config file into a validated RunConfig."""
    ns = _build_parser().parse_args(argv)
    file_values = _read_config_file(ns.config) if ns.config else {}
    if "subcommand" in file_values and file_values["subcommand"] != ns.subcommand:
        raise ConfigError("subcommand", file_values["subcommand"], f"{ns.subcommand!r} to match the command line")
    merged = dict(_DEFAULTS)
    merged.update({k: v for k, v in file_values.items() if k != "subcommand"})
    for key in _DEFAULTS:
        flag = getattr(ns, key.replace("-", "_"), None)
        if flag is not None:
            merged[key] = flag

    sc = ns.subcommand
    scenario = merged["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", scenario, f"one of {', '.join(SCENARIOS)}")
    engine = merged["engine"]
    if engine not in _METHODS:
        raise ConfigError("engine", engine, f"one of {', '.join(_METHODS)}")
    if engine == "ellipsoid" and sc in ("rankmap", "shrinkage"):
        raise ConfigError("engine", engine, f"a resampling engine ({', '.join(ENGINE_KINDS)}) for {sc}")

    n_values = tuple(_parse_int("n", part, lo=1, expected="integer(s) >= 1")
                     for part in str(merged["n"]).split(","))
    if sc != "shrinkage" and len(n_values) != 1:
        raise ConfigError("n", merged["n"], f"a single sample size for {sc}")
    if sc == "shrinkage" and list(n_values) != sorted(n_values):
        raise ConfigError("n", merged["n"], "an increasing list of sample sizes")

    m = _parse_int("m", merged["m"], lo=2, expected="an integer >= 2")
    q = _parse_int("q", merged["q"], lo=1, expected="an integer >= 1")
    uses_q = sc == "shrinkage" or (sc == "coverage" and engine != "ellipsoid")
    if uses_q and q > m:
        raise ConfigError("q", merged["q"], f"q must be <= m (m = {m})")
    trials = _parse_int("trials", merged["trials"], lo=1, expected="an integer >= 1")
    alpha = _parse_float("alpha", merged["alpha"], 0.5, 1.0, "a real strictly between 0.5 and 1")
    delta = _parse_float("delta", merged["delta"], 0.0, 1.0, "a real strictly between 0 and 1")
    grid = _parse_grid(merged["grid"])
    seed = _parse_int("seed", merged["seed"], expected="an integer")
    workers = _parse_int("workers", merged["workers"], lo=1, expected="an integer >= 1")
    return RunConfig(
        subcommand=sc,
        scenario=scenario,
        engine=engine,
        n_values=n_values,
        m=m,
        q=q,
        trials=trials,
        alpha=alpha,
        delta=delta,
        grid=grid,
        seed=seed,
        workers=workers,
        out=str(merged["out"]),
    )


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def _write_bytes(path, payload: bytes):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise OSError(f"cannot write to {path.resolve()}: {exc}") from exc


def _write_text(path, text: str):
    _write_bytes(path, text.encode("utf-8"))


def resolved_config_text(cfg: RunConfig) -> str:
    grid = cfg.grid
    values = {
        "subcommand": cfg.subcommand,
        "scenario": cfg.scenario,
        "engine": cfg.engine,
        "n": ",".join(str(v) for v in cfg.n_values),
        "m": cfg.m,
        "q": cfg.q,
        "trials": cfg.trials,
        "alpha": repr(cfg.alpha),
        "delta": repr(cfg.delta),
        "grid": f"{grid.a_min!r},{grid.a_max!r},{grid.b_min!r},{grid.b_max!r},{grid.res}",
        "seed": cfg.seed,
        "workers": cfg.workers,
        "out": cfg.out,
    }
    return "".join(f"{k} = {values[k]}\n" for k in sorted(values))


def _coverage_csv(reports) -> str:
    lines = ["method,n,m,q,trials,hits,coverage"]
    for r in reports:
        m = "" if r.m is None else str(r.m)
        q = "" if r.q is None else str(r.q)
        lines.append(f"{r.method},{r.n},{m},{q},{r.trials},{r.hits},{r.level!r}")
    return "\n".join(lines) + "\n"


def _rankmap_csv(rmap: RankMap) -> str:
    lines = ["a,b,relative_rank"]
    for i, a in enumerate(rmap.a_values):
        for j, b in enumerate(rmap.b_values):
            lines.append(f"{float(a)!r},{float(b)!r},{float(rmap.values[i, j])!r}")
    return "\n".join(lines) + "\n"


def _shrinkage_csv(rows) -> str:
    lines = ["n,accepted_fraction,repeats"]
    for n, frac, repeats in rows:
        lines.append(f"{n},{frac!r},{repeats}")
    return "\n".join(lines) + "\n"


def emit_csv(obj, path) -> None:
    """Write a coverage report (or list of them), rank map, or shrinkage table
    as a UTF-8, dot-decimal, newline-terminated CSV file."""
    if isinstance(obj, RankMap):
        _write_text(path, _rankmap_csv(obj))
        return
    if isinstance(obj, CoverageReport):
        _write_text(path, _coverage_csv([obj]))
        return
    rows = list(obj)
    if rows and isinstance(rows[0], CoverageReport):
        _write_text(path, _coverage_csv(rows))
    else:
        _write_text(path, _shrinkage_csv(rows))


# three-anchor linear color ramp, dark violet -> orange -> yellow
_RAMP = ((13, 8, 135), (219, 92, 104), (240, 249, 33))


def _ramp_color(t: float):
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        lo, hi, u = _RAMP[0], _RAMP[1], 2.0 * t
    else:
        lo, hi, u = _RAMP[1], _RAMP[2], 2.0 * t - 1.0
    return tuple(int(round(lo[k] + (hi[k] - lo[k]) * u)) for k in range(3))


def _paint_cross(img, row, col, color, arm):
    h, w, _ = img.shape
    for dr in range(-arm, arm + 1):
        r = row + dr
        if 0 <= r < h:
            img[r, max(col - 1, 0) : min(col + 2, w)] = color
    for dc in range(-arm, arm + 1):
        c = col + dc
        if 0 <= c < w:
            img[max(row - 1, 0) : min(row + 2, h), c] = color


def render_heatmap(rmap: RankMap, path, block: int = 4) -> None:
    """Raster the rank map to a binary PPM (P6): one block x block pixel tile
    per grid cell, linear color ramp over [1/m, 1], a on the horizontal axis,
    b increasing upward. The true parameters are marked with a white cross;
    the engine's point estimate, when it lives in the candidate family, with
    a cyan cross.
    """
    if rmap.values.size == 0:
        raise ValueError("rank map is empty")
    na, nb = len(rmap.a_values), len(rmap.b_values)
    lo = 1.0 / rmap.m
    span = 1.0 - lo
    width, height = na * block, nb * block
    img = np.empty((height, width, 3), dtype=np.uint8)
    for i in range(na):
        for j in range(nb):
            t = (rmap.values[i, j] - lo) / span if span > 0 else 1.0
            color = _ramp_color(t)
            r0 = (nb - 1 - j) * block
            img[r0 : r0 + block, i * block : (i + 1) * block] = color

    def mark(a, b, color):
        if not (rmap.a_values[0] <= a <= rmap.a_values[-1] and rmap.b_values[0] <= b <= rmap.b_values[-1]):
            return
        i = int(np.argmin(np.abs(rmap.a_values - a)))
        j = int(np.argmin(np.abs(rmap.b_values - b)))
        _paint_cross(img, (nb - 1 - j) * block + block // 2, i * block + block // 2,
                     color, arm=block)

    from .experiments import TRUE_PARAMS

    mark(*TRUE_PARAMS, (255, 255, 255))
    if rmap.estimate is not None:
        mark(rmap.estimate[0], rmap.estimate[1], (0, 255, 255))
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    _write_bytes(path, header + img.tobytes())


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------

def _run_rankmap(cfg: RunConfig, out: Path) -> None:
    sconf = ScenarioConfig(cfg.scenario, cfg.n, master_seed=cfg.seed)
    engine = make_engine(cfg.engine, cfg.n, alpha=cfg.alpha)
    rmap = rank_map(sconf, engine, cfg.m, cfg.grid, workers=cfg.workers)
    emit_csv(rmap, out / "rankmap.csv")
    render_heatmap(rmap, out / "rankmap.ppm")
    print(f"rankmap: {cfg.grid.res}x{cfg.grid.res} cells, engine={cfg.engine}, "
          f"m={cfg.m}, n={cfg.n} -> {out / 'rankmap.csv'}")


def _run_coverage(cfg: RunConfig, out: Path) -> None:
    sconf = ScenarioConfig(cfg.scenario, cfg.n, master_seed=cfg.seed)
    report = coverage_mc(
        sconf, cfg.engine, cfg.m, cfg.q, cfg.trials,
        alpha=cfg.alpha, delta=cfg.delta, workers=cfg.workers,
    )
    emit_csv(report, out / "coverage.csv")
    print(f"coverage: method={report.method}, n={report.n}, "
          f"level={report.level:.4f} (nominal {report.nominal:.4f}), "
          f"failures={report.failures} of {report.trials} trials")


def _run_shrinkage(cfg: RunConfig, out: Path) -> None:
    sconf = ScenarioConfig(cfg.scenario, cfg.n_values[0], master_seed=cfg.seed)
    rows = shrinkage_curve(
        sconf, cfg.engine, cfg.m, cfg.q, list(cfg.n_values), cfg.grid,
        repeats=cfg.trials, alpha=cfg.alpha, workers=cfg.workers,
    )
    emit_csv(rows, out / "shrinkage.csv")
    for n, frac, repeats in rows:
        print(f"shrinkage: n={n} accepted_fraction={frac:.4f} ({repeats} repeats)")


def _run_ellipsoid_demo(cfg: RunConfig, out: Path) -> None:
    sconf = ScenarioConfig(cfg.scenario, cfg.n, master_seed=cfg.seed)
    sample = gen_sample(sconf, RngStream(cfg.seed, 0))
    region = build_ellipsoid(sample, cfg.delta)
    lines = ["key,value"]
    lines.append(f"scenario,{cfg.scenario}")
    lines.append(f"n,{cfg.n}")
    lines.append(f"delta,{cfg.delta!r}")
    lines.append(f"radius,{region.radius!r}")
    for i, v in enumerate(region.center):
        lines.append(f"center_{i},{float(v)!r}")
    for i in range(region.dim):
        for j in range(region.dim):
            lines.append(f"shape_{i}_{j},{float(region.shape[i, j])!r}")
    _write_text(out / "ellipsoid.csv", "\n".join(lines) + "\n")
    # membership raster over the same grid the rank maps use
    grid = cfg.grid
    values = np.empty((grid.res, grid.res))
    for i, a in enumerate(grid.a_values):
        for j, b in enumerate(grid.b_values):
            values[i, j] = 0.5 if ellipsoid_contains(region, (a, b)) else 1.0
    rmap = RankMap(
        a_values=grid.a_values, b_values=grid.b_values, values=values,
        engine_kind="ellipsoid", m=2, n=cfg.n, seed=cfg.seed,
        scenario=cfg.scenario, estimate=(region.center[0], region.center[1]),
    )
    render_heatmap(rmap, out / "ellipsoid.ppm")
    print(f"ellipsoid-demo: center={tuple(round(float(v), 4) for v in region.center)}, "
          f"radius={region.radius:.4f} -> {out / 'ellipsoid.csv'}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    runner = {
        "rankmap": _run_rankmap,
        "coverage": _run_coverage,
        "shrinkage": _run_shrinkage,
        "ellipsoid-demo": _run_ellipsoid_demo,
    }[cfg.subcommand]
    try:
        _write_text(out / "config.resolved", resolved_config_text(cfg))
        runner(cfg, out)
    except (SeparationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
