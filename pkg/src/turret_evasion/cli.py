"""Batch experiment driver.

Each subcommand turns a small parameter map into CSV tables (plus optional
SVG or TSPLIB side files) in an output directory, next to a manifest.json
recording the resolved spec, package version, seed and wall-clock time.

    turret-evasion Region2D --out runs/region
    turret-evasion --spec sweep.toml --threads 4
    turret-evasion Engagement3D --set formation=plane --set xi=[0,1]

Exit status: 0 success, 2 bad spec, 3 numerical failure.
"""
import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, duo2d, geometry2d, placement2d, sim3d, sphere3d, tsp
from .errors import AttackNeverSucceeds, NumericalFailure

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_BAD_SPEC, EXIT_NUMERICAL = 0, 2, 3
TOP_LEVEL_KEYS = ("subcommand", "params", "output_path", "seed")

DEFAULTS = {
    "Region2D": {"v": 1.0, "phi": 0.0, "num": 721, "svg": False},
    "Sweep2D": {"n_min": 1, "n_max": 10, "trials": 500, "epsilon": 1e-3},
    "Duo2D": {"alpha_min": 0.05, "alpha_max": math.pi, "num": 32,
              "strategies": ["radial", "tangent", "hybrid", "transition"], "dt": duo2d.DT},
    "SpherePaths": {"ns": [25, 50, 100, 200, 400], "generators": ["fibonacci"], "metric": "free",
                    "exact_max": 12, "lloyd_iterations": 30, "tsplib": True},
    "Engagement3D": {"formation": "cylinder", "strategies": ["direct"], "xi": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
                     "n": 32, "d": 20.0, "resolution": 0.5, "d_cap": 400.0, "dt": 1.0 / 240.0,
                     "hit_radius": 0.5, "max_speed": 5.0, "max_accel": 10.0, "kill_cone_deg": 0.5,
                     "pan_rate_deg": 115.0, "tilt_rate_deg": 115.0, "repulsion_cone": math.pi / 8,
                     "k1": 4.0, "k2": 5.0},
}


class SpecError(ValueError):
    """Invalid experiment spec; the message names the offending key."""


# --------------------------------------------------------------------------
# spec handling
# --------------------------------------------------------------------------

def _load_file(path: Path) -> dict:
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise SpecError(f"--spec: cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(text.decode())
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"--spec: cannot parse {path}: {exc}") from None


def _coerce(key: str, value, default):
    """Cast ``value`` to the type of ``default`` or raise SpecError naming ``key``."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    elif isinstance(default, list):
        if isinstance(value, list) and value:
            kind = default[0]
            return [_coerce(f"{key}[{i}]", v, kind) for i, v in enumerate(value)]
        if not isinstance(value, list):
            return [_coerce(key, value, default[0])]
    raise SpecError(f"params.{key}: expected {type(default).__name__}, got {value!r}")


def resolve_spec(raw: dict, subcommand=None, out=None, seed=None, overrides=()) -> dict:
    """Merge a raw spec with command-line values and validate every key."""
    if not isinstance(raw, dict):
        raise SpecError("spec: top level must be a table")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise SpecError(f"{key}: unknown key")
    sub = subcommand or raw.get("subcommand")
    if sub is None:
        raise SpecError("subcommand: missing")
    if raw.get("subcommand") not in (None, sub):
        raise SpecError(f"subcommand: spec says {raw['subcommand']!r} but {sub!r} was requested")
    if sub not in DEFAULTS:
        raise SpecError(f"subcommand: unknown value {sub!r}")
    params = dict(raw.get("params") or {})
    if not isinstance(params, dict):
        raise SpecError("params: must be a table")
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep:
            raise SpecError(f"--set {item}: expected key=value")
        try:
            params[key] = json.loads(text)
        except ValueError:
            params[key] = text
    defaults = DEFAULTS[sub]
    resolved = {}
    for key, value in params.items():
        if key not in defaults:
            raise SpecError(f"params.{key}: unknown key for {sub}")
        resolved[key] = _coerce(key, value, defaults[key])
    for key, value in defaults.items():
        resolved.setdefault(key, list(value) if isinstance(value, list) else value)

    seed = raw.get("seed", 0) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise SpecError(f"seed: expected a non-negative integer, got {seed!r}")
    output = out or raw.get("output_path") or f"out-{sub}"
    if not isinstance(output, str):
        raise SpecError("output_path: expected a path string")
    return {"subcommand": sub, "params": resolved, "output_path": output, "seed": seed}


def _choice(key, value, options):
    if value not in options:
        raise SpecError(f"params.{key}: {value!r} not in {sorted(options)}")
    return options[value]


def _positive(params, *keys):
    for key in keys:
        if not params[key] > 0:
            raise SpecError(f"params.{key}: must be positive")


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

class Outputs:
    """Tracks written files so a failed run can be rolled back."""

    def __init__(self, root: Path):
        self.root = root
        self.created = []
        self._made_root = not root.exists()

    def path(self, name: str) -> Path:
        p = self.root / name
        if not p.parent.exists():
            p.parent.mkdir(parents=True)
            self.created.append(p.parent)
        self.created.append(p)
        return p

    def csv(self, name: str, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])

    def text(self, name: str, body: str):
        self.path(name).write_text(body)

    def files(self):
        return sorted(str(p.relative_to(self.root)) for p in self.created if p.is_file())

    def rollback(self):
        for p in reversed(self.created):
            if p.is_file():
                p.unlink()
            elif p.is_dir() and not any(p.iterdir()):
                p.rmdir()
        if self._made_root and self.root.exists() and not any(self.root.iterdir()):
            self.root.rmdir()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def _trial_seed(seed: int, *keys) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _svg(curves, size: int = 480) -> str:
    pts = np.concatenate([c for _, c in curves])
    span = float(np.max(np.abs(pts))) * 1.05 or 1.0
    scale = size / (2 * span)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    for colour, c in curves:
        xy = " ".join(f"{(x + span) * scale:.3f},{(span - y) * scale:.3f}" for x, y in c)
        lines.append(f'<polyline fill="none" stroke="{colour}" points="{xy}"/>')
    lines.append(f'<circle cx="{size / 2}" cy="{size / 2}" r="3"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def run_region2d(p, seed, threads, out: Outputs):
    _positive(p, "v", "num")
    radial, tangent = geometry2d.boundary_curves(p["v"], p["phi"], p["num"])
    rows = [("radial", i, x, y) for i, (x, y) in enumerate(radial)]
    rows += [("tangent", i, x, y) for i, (x, y) in enumerate(tangent)]
    out.csv("region_boundaries.csv", ("curve", "index", "x", "y"), rows)
    peak = float(np.linalg.norm(geometry2d.survivable_boundary(geometry2d.GAMMA_MAX, 0.0, p["v"])))
    out.csv("region_summary.csv", ("quantity", "value"), [
        ("gamma_max", geometry2d.GAMMA_MAX),
        ("tangent_max_radius", peak),
        ("tangent_max_radius_sampled", float(np.max(np.hypot(*tangent.T)))),
        ("radial_max_radius", float(np.max(np.hypot(*radial.T)))),
    ])
    if p["svg"]:
        out.text("region.svg", _svg([("red", radial), ("blue", tangent)]))


def run_sweep2d(p, seed, threads, out: Outputs):
    _positive(p, "n_min", "trials", "epsilon")
    if p["n_max"] < p["n_min"]:
        raise SpecError("params.n_max: must be >= n_min")
    if p["n_max"] > tsp.MAX_EXACT:
        raise SpecError(f"params.n_max: exact sweeps support at most {tsp.MAX_EXACT} drones")
    ns = range(p["n_min"], p["n_max"] + 1)
    jobs = [(n, k, _trial_seed(seed, n, k)) for n in ns for k in range(p["trials"])]

    def trial(job):
        n, k, s = job
        return (n, k, s, *placement2d.random_trial(n, s))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        rows = list(ex.map(trial, jobs))
    out.csv("sweep_trials.csv", ("n", "trial", "trial_seed", "greedy", "optimal"), rows)
    means = []
    for n in ns:
        g = np.array([r[3] for r in rows if r[0] == n])
        o = np.array([r[4] for r in rows if r[0] == n])
        means.append((n, float(g.mean()), float(o.mean()), float(g.std()), float(o.std())))
    out.csv("sweep_means.csv", ("n", "greedy_mean", "optimal_mean", "greedy_std", "optimal_std"), means)

    worst = []
    for n in ns:
        try:
            gcfg = placement2d.greedy_spacing(n, p["epsilon"])
            gs = (placement2d.greedy_sweep(gcfg).total_length, placement2d.optimal_sweep(gcfg).total_length)
        except ValueError:
            gs = (math.nan, math.nan)
        dcfg = placement2d.doubling_spacing(n)
        worst.append((n, *gs, placement2d.greedy_sweep(dcfg).total_length,
                      placement2d.optimal_sweep(dcfg).total_length))
    out.csv("sweep_constructions.csv",
            ("n", "halving_greedy", "halving_optimal", "doubling_greedy", "doubling_optimal"), worst)


_DUO = {s.name.lower(): s for s in duo2d.DuoStrategy}


def run_duo2d(p, seed, threads, out: Outputs):
    _positive(p, "num", "dt")
    if not 0 <= p["alpha_min"] <= p["alpha_max"] <= math.pi:
        raise SpecError("params.alpha_min: need 0 <= alpha_min <= alpha_max <= pi")
    strategies = [_choice("strategies", s, _DUO) for s in p["strategies"]]
    alphas = np.linspace(p["alpha_min"], p["alpha_max"], p["num"])
    rows = duo2d.r_max_curve(alphas, strategies, threads=threads, dt=p["dt"])
    out.csv("duo_curve.csv", ("alpha1", "strategy", "r_max"), [(a, s.name.lower(), r) for a, s, r in rows])
    best = []
    for a in alphas:
        cands = [(r, s) for a2, s, r in rows if a2 == a and not math.isnan(r)]
        r, s = max(cands, key=lambda c: c[0]) if cands else (math.nan, None)
        best.append((a, s.name.lower() if s else "", r))
    out.csv("duo_best.csv", ("alpha1", "strategy", "r_max"), best)


_METRICS = {"free": sphere3d.FREE, "pantilt": sphere3d.Metric(sphere3d.MetricKind.PAN_TILT_RATE)}


def _point_set(gen, n, seed, iterations):
    if gen == "fibonacci":
        return sphere3d.fibonacci_sphere(n).points
    if gen == "lloyd":
        return sphere3d.lloyd_relax(n, seed, iterations).points
    return sphere3d.random_directions(n, np.random.default_rng(seed))


def run_sphere_paths(p, seed, threads, out: Outputs):
    metric = _choice("metric", p["metric"], _METRICS)
    for g in p["generators"]:
        _choice("generators", g, {"fibonacci": 0, "lloyd": 0, "random": 0})
    if any(n < 1 for n in p["ns"]):
        raise SpecError("params.ns: every n must be >= 1")
    if "lloyd" in p["generators"] and any(n < 4 for n in p["ns"]):
        raise SpecError("params.ns: lloyd relaxation needs n >= 4")
    start = np.array([1.0, 0.0, 0.0])
    jobs = [(g, n) for g in p["generators"] for n in p["ns"]]

    def solve(job):
        g, n = job
        pts = _point_set(g, n, _trial_seed(seed, n), p["lloyd_iterations"])
        res = [sphere3d.nn_path(pts, start, metric), sphere3d.improved_path(pts, start, metric)]
        if n <= min(p["exact_max"], tsp.MAX_EXACT):
            res.append(sphere3d.exact_shp(pts, start, metric))
        return g, n, pts, res

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        solved = list(ex.map(solve, jobs))

    rows = [(n, g, r.solver.value, r.total) for g, n, _, res in solved for r in res]
    out.csv("sphere_paths.csv", ("n", "generator", "solver", "total_radians"), rows)
    for g, n, pts, res in solved:
        out.csv(f"points/{g}_{n}.csv", ("x", "y", "z"), pts)
        order = res[-1].order
        out.csv(f"paths/{g}_{n}_{res[-1].solver.value}.csv", ("step", "point"), enumerate(order))
        if p["tsplib"]:
            matrix = sphere3d.phantom_transform(pts, start, metric)
            target = out.path(f"tsplib/{g}_{n}.tsp")
            sphere3d.write_tsplib(matrix, target, name=f"{g}_{n}", start=0, phantom=n + 1)
    fits = []
    for g in p["generators"]:
        for solver in (sphere3d.Solver.NN, sphere3d.Solver.TWO_OPT):
            pts = [(n, t) for n, gg, s, t in rows if gg == g and s == solver.value]
            if len(pts) >= 3:
                ns, totals = np.array(pts).T
                c, rms = sphere3d.sqrt_fit(ns, totals)
                rel = float(np.sqrt(np.mean((totals / (c * np.sqrt(ns)) - 1.0) ** 2)))
                fits.append((g, solver.value, c, rms, rel))
    out.csv("sphere_fit.csv", ("generator", "solver", "c", "rms", "relative_rms"), fits)


_FORMATIONS = {"plane": sim3d.Formation.PLANE, "half_cylinder": sim3d.Formation.HALF_CYLINDER,
               "cylinder": sim3d.Formation.CYLINDER}
_ATTACKS = {"direct": sim3d.AttackStrategy.DIRECT, "indirect": sim3d.AttackStrategy.INDIRECT}


def run_engagement3d(p, seed, threads, out: Outputs):
    formation = _choice("formation", p["formation"], _FORMATIONS)
    strategies = [(s, _choice("strategies", s, _ATTACKS)) for s in p["strategies"]]
    _positive(p, "n", "d", "resolution", "d_cap", "dt", "hit_radius", "max_speed", "max_accel",
              "kill_cone_deg", "pan_rate_deg", "tilt_rate_deg", "repulsion_cone", "k1", "k2")
    for x in p["xi"]:
        if not 0 <= x <= 1:
            raise SpecError(f"params.xi: {x} outside [0, 1]")
    turret = sim3d.Turret3D(pan_rate_max=math.radians(p["pan_rate_deg"]),
                            tilt_rate_max=math.radians(p["tilt_rate_deg"]),
                            kill_cone_half_angle=math.radians(p["kill_cone_deg"]))
    params = sim3d.SimParams(dt=p["dt"], hit_radius=p["hit_radius"], max_speed=p["max_speed"],
                             max_accel=p["max_accel"], turret=turret, repulsion_cone=p["repulsion_cone"],
                             seed=seed)
    jobs = [(name, st, xi) for name, st in strategies for xi in p["xi"]]

    def search(job):
        name, st, xi = job
        cfg = sim3d.AttackConfig(formation, p["n"], p["d"], st, xi, p["k1"], p["k2"])
        try:
            res = sim3d.max_start_distance(cfg, params, d_cap=p["d_cap"], resolution=p["resolution"])
        except AttackNeverSucceeds:
            return p["formation"], name, xi, math.nan, "never"
        status = "unbounded" if res.unbounded else "nonmonotone" if res.monotone_violation else "ok"
        return p["formation"], name, xi, res.distance, status

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        rows = list(ex.map(search, jobs))
    out.csv("engagement.csv", ("formation", "strategy", "xi", "max_distance_m", "status"), rows)


COMMANDS = {
    "Region2D": run_region2d,
    "Sweep2D": run_sweep2d,
    "Duo2D": run_duo2d,
    "SpherePaths": run_sphere_paths,
    "Engagement3D": run_engagement3d,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def run(spec: dict, threads: int = 1) -> Path:
    """Execute a resolved spec; on any failure every file it wrote is removed."""
    root = Path(spec["output_path"])
    if root.exists() and not root.is_dir():
        raise SpecError(f"output_path: {root} is not a directory")
    out = Outputs(root)
    try:
        root.mkdir(parents=True, exist_ok=True)
        manifest = out.path("manifest.json")
        record = {"spec": spec, "version": __version__, "seed": spec["seed"],
                  "timestamp": datetime.now(timezone.utc).isoformat(), "status": "running"}
        manifest.write_text(json.dumps(record, indent=2) + "\n")
        COMMANDS[spec["subcommand"]](spec["params"], spec["seed"], threads, out)
        record.update(status="complete", files=[f for f in out.files() if f != "manifest.json"])
        manifest.write_text(json.dumps(record, indent=2) + "\n")
    except BaseException:
        out.rollback()
        raise
    return root


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="turret-evasion", description=__doc__.split("\n")[0])
    ap.add_argument("subcommand", nargs="?", choices=sorted(COMMANDS),
                    help="experiment to run (may instead come from the spec file)")
    ap.add_argument("--spec", type=Path, help="experiment spec, JSON or TOML")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="base seed (default 0)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one parameter; VALUE is parsed as JSON when possible")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise SpecError("--threads: must be >= 1")
        raw = _load_file(args.spec) if args.spec else {}
        spec = resolve_spec(raw, args.subcommand, args.out, args.seed, args.set)
        root = run(spec, threads=args.threads)
    except SpecError as exc:
        print(f"turret-evasion: bad spec: {exc}", file=sys.stderr)
        return EXIT_BAD_SPEC
    except NumericalFailure as exc:
        print(f"turret-evasion: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, ArithmeticError) as exc:
        # library-level parameter rejection surfaces as a spec problem
        code = EXIT_NUMERICAL if isinstance(exc, ArithmeticError) else EXIT_BAD_SPEC
        print(f"turret-evasion: {exc}", file=sys.stderr)
        return code
    print(root)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
