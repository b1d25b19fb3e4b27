"""``spfc`` command line: sweeps, single-point evaluations and figure data.

Frequencies are given as nu = omega / 2 pi in GHz and converted to rad/s in
exactly one place (``ghz_to_rad_s``).  Every run writes its data files plus
a ``manifest.json`` listing each file with a SHA-256; ``--verify`` recomputes
into a scratch directory and compares against that manifest.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .comb import ConvergenceError, asymptotic_sideband, parabolic, sawtooth, sideband_coefficients
from .dynamics import HygieneError, PropagationError, SystemParams
from .hom import EmissionError, floquet_vs_master, g2_curve, master_g2_zero, source_pair
from .io import dump_json, sha256_file, write_csv
from .overlap import (analytic_optimal_delay, delay_scan, g2_floquet_zero, optimal_delay,
                      overlap_map, phase_map, pulse_shaper_overlap)
from .special import DomainError

log = logging.getLogger("spfc")

EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("sidebands", "overlap-map", "optimal-delay", "g2-zero", "g2-tau", "compare", "reproduce")
FIGURES = ("fig2", "fig3a", "fig3b", "fig4a", "fig4b", "fig4c")
NUMERIC_ERRORS = (ConvergenceError, PropagationError, HygieneError, EmissionError, DomainError, ArithmeticError)


class VerificationError(Exception):
    pass


def ghz_to_rad_s(nu_ghz: float) -> float:
    return 2.0 * math.pi * 1e9 * float(nu_ghz)


_DEPTH_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi|π)?\s*$")


def parse_depth(text: str) -> float:
    """'2.6pi', '5*pi', 'pi', '3.7' -> float."""
    m = _DEPTH_RE.match(str(text))
    if not m or (m.group(1) is None and m.group(2) is None):
        raise ValueError(f"cannot parse depth {text!r}")
    coef = float(m.group(1)) if m.group(1) is not None else 1.0
    return coef * math.pi if m.group(2) else coef


def parse_grid(text: str) -> np.ndarray:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be min:max:count, got {text!r}")
    lo, hi = parse_depth(parts[0]), parse_depth(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError("grid count must be >= 1")
    return np.linspace(lo, hi, count)


def parse_delay(text: Optional[str]) -> Optional[float]:
    """'opt' -> None; '<ps>' -> seconds."""
    if text is None or str(text).strip().lower() == "opt":
        return None
    return float(text) * 1e-12


@dataclass
class RunConfig:
    command: str
    figure: Optional[str] = None
    depth: float = 5 * math.pi
    omega: float = ghz_to_rad_s(50)
    g: float = ghz_to_rad_s(8)
    gamma: float = ghz_to_rad_s(1)
    kappa: float = ghz_to_rad_s(16)
    delay: Optional[float] = None
    grid: Optional[np.ndarray] = None
    out: Path = Path(".")
    fmt: str = "csv"
    jobs: int = 1
    verify: bool = False
    kind: str = "parabolic"
    epsilon: float = 1e-6
    delay_count: int = 200
    tau_max_periods: float = 3.0
    samples_per_period: int = 128
    method: str = "floquet"
    raw: dict = field(default_factory=dict)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def system(self) -> SystemParams:
        return SystemParams(self.g, self.kappa, self.gamma, self.omega, sawtooth(0.0, self.omega),
                            dt_max=self.period / self.samples_per_period)

    def signal(self, A: float, delay: float = 0.0):
        return (sawtooth if self.kind == "sawtooth" else parabolic)(A, self.omega, delay)

    def delay_for(self, A: float) -> float:
        if self.delay is not None:
            return self.delay
        return analytic_optimal_delay(A, self.omega) if A > 0 else 0.0

    def echo(self) -> dict:
        d = {k: v for k, v in self.raw.items() if k not in ("verify", "out", "jobs")}
        d.update({"omega_rad_s": self.omega, "g_rad_s": self.g, "gamma_rad_s": self.gamma,
                  "kappa_rad_s": self.kappa, "depth_A": self.depth})
        return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spfc", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("figure", nargs="?", choices=FIGURES, help="figure id for 'reproduce'")
    p.add_argument("--depth", default="5pi", help="modulation depth A, e.g. 2.6pi")
    p.add_argument("--omega-ghz", type=float, default=50.0, help="tooth spacing Omega/2pi in GHz")
    p.add_argument("--g-ghz", type=float, default=8.0)
    p.add_argument("--gamma-ghz", type=float, default=1.0)
    p.add_argument("--kappa-ghz", type=float, default=16.0)
    p.add_argument("--delay", default="opt", help="'opt' or a drive delay in ps")
    p.add_argument("--grid", default=None, help="depth grid min:max:count (accepts pi literals)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    p.add_argument("--verify", action="store_true", help="recompute and compare against manifest.json")
    p.add_argument("--kind", choices=("parabolic", "sawtooth"), default="parabolic")
    p.add_argument("--epsilon", type=float, default=1e-6, help="sideband truncation weight")
    p.add_argument("--delay-count", type=int, default=200, help="delay samples over one period")
    p.add_argument("--tau-max-periods", type=float, default=3.0)
    p.add_argument("--samples-per-period", type=int, default=128)
    p.add_argument("--method", choices=("floquet", "master", "both"), default="floquet")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    from .parallel import default_jobs

    if ns.command == "reproduce" and ns.figure is None:
        raise ValueError("reproduce needs a figure id: " + ", ".join(FIGURES))
    for name in ("omega_ghz", "g_ghz", "gamma_ghz", "kappa_ghz"):
        if not (getattr(ns, name) >= 0 and math.isfinite(getattr(ns, name))):
            raise ValueError(f"--{name.replace('_', '-')} must be a finite value >= 0")
    if ns.omega_ghz <= 0:
        raise ValueError("--omega-ghz must be positive")
    raw = {k: v for k, v in vars(ns).items() if k != "verbose"}
    return RunConfig(
        command=ns.command, figure=ns.figure, depth=parse_depth(ns.depth),
        omega=ghz_to_rad_s(ns.omega_ghz), g=ghz_to_rad_s(ns.g_ghz), gamma=ghz_to_rad_s(ns.gamma_ghz),
        kappa=ghz_to_rad_s(ns.kappa_ghz), delay=parse_delay(ns.delay),
        grid=None if ns.grid is None else parse_grid(ns.grid), out=Path(ns.out), fmt=ns.fmt,
        jobs=default_jobs() if ns.jobs is None else max(1, ns.jobs), verify=ns.verify, kind=ns.kind,
        epsilon=ns.epsilon, delay_count=ns.delay_count, tau_max_periods=ns.tau_max_periods,
        samples_per_period=ns.samples_per_period, method=ns.method, raw=raw,
    )


# --------------------------------------------------------------------------
# outputs


class Output:
    """Collects the files of one run and writes the manifest last."""

    def __init__(self, outdir: Path, fmt: str):
        self.outdir = Path(outdir)
        self.fmt = fmt
        self.files: list[str] = []
        self.meta: dict = {}

    def table(self, stem: str, header, rows, plot: Optional[str] = None) -> None:
        rows = list(rows)
        if self.fmt == "json":
            name = f"{stem}.json"
            dump_json({"columns": list(header), "rows": [[_plain(v) for v in r] for r in rows]}, self.outdir / name)
        else:
            name = f"{stem}.csv"
            write_csv(self.outdir / name, header, rows)
        self.files.append(name)
        if plot:
            self.text(f"{stem}_plot.py", _plot_script(name, header, plot))

    def json(self, name: str, obj) -> None:
        dump_json(obj, self.outdir / name)
        self.files.append(name)

    def text(self, name: str, body: str) -> None:
        with open(self.outdir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        self.files.append(name)

    def manifest(self, cfg: RunConfig) -> dict:
        return {
            "tool": "spfc",
            "version": __version__,
            "command": cfg.command,
            "figure": cfg.figure,
            "parameters": _plain(cfg.echo()),
            "units": {"input_frequencies": "nu = omega/2pi in GHz", "internal": "rad/s",
                      "omega_reading": "omega-ghz is the comb tooth spacing nu = Omega/2pi"},
            "meta": _plain(self.meta),
            "files": [{"name": f, "sha256": sha256_file(self.outdir / f)} for f in sorted(self.files)],
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


_PLOT_TEMPLATE = '''"""Plot {data}; generated by spfc, edit freely."""
import csv
import matplotlib.pyplot as plt

with open("{data}") as fh:
    rows = list(csv.DictReader(fh))
cols = {cols!r}
{body}
plt.tight_layout()
plt.savefig("{data}".rsplit(".", 1)[0] + ".png", dpi=150)
'''

_PLOT_BODIES = {
    "xy": '''x = [float(r[cols[0]]) for r in rows]
for c in cols[1:]:
    plt.plot(x, [float(r[c]) for r in rows], label=c)
plt.xlabel(cols[0]); plt.legend()''',
    "grouped": '''groups = {}
for r in rows:
    groups.setdefault(r[cols[0]], []).append(r)
for key, rs in groups.items():
    plt.plot([float(r[cols[1]]) for r in rs], [float(r[cols[2]]) for r in rs], label=f"{cols[0]}={float(key):.3g}")
plt.xlabel(cols[1]); plt.ylabel(cols[2]); plt.legend()''',
    "by_n": '''import collections
series = collections.defaultdict(list)
for r in rows:
    series[int(r["n"])].append((float(r["A"]), float(r["abs2_s_n"]), float(r["abs2_asymptotic"])))
for n, pts in sorted(series.items()):
    plt.plot([p[0] for p in pts], [p[1] for p in pts], label=f"n={n}")
pts = series[min(series)]
plt.plot([p[0] for p in pts], [p[2] for p in pts], "r-", lw=3, label="large-A limit")
plt.xlabel("A"); plt.ylabel("|s_n|^2"); plt.legend()''',
    "map": '''import numpy as np
xs = sorted({float(r[cols[0]]) for r in rows}); ys = sorted({float(r[cols[1]]) for r in rows})
Z = np.full((len(ys), len(xs)), np.nan)
xi = {v: i for i, v in enumerate(xs)}; yi = {v: i for i, v in enumerate(ys)}
for r in rows:
    Z[yi[float(r[cols[1]])], xi[float(r[cols[0]])]] = float(r[cols[-1]])
plt.pcolormesh(xs, ys, Z, shading="auto"); plt.colorbar(label=cols[-1])
plt.xlabel(cols[0]); plt.ylabel(cols[1])''',
}


def _plot_script(data: str, header, kind: str) -> str:
    return _PLOT_TEMPLATE.format(data=data, cols=list(header), body=_PLOT_BODIES[kind])


# --------------------------------------------------------------------------
# commands


def _comb(cfg: RunConfig, A: float):
    return sideband_coefficients(cfg.signal(A), cfg.epsilon)


def _delays_over_period(cfg: RunConfig) -> np.ndarray:
    return np.arange(cfg.delay_count) * (cfg.period / cfg.delay_count)


def cmd_sidebands(cfg: RunConfig, out: Output) -> None:
    comb = _comb(cfg, cfg.depth)
    if cfg.fmt == "json":
        out.json("sidebands.json", comb.to_json())
    else:
        out.table("sidebands", ["n", "re", "im", "abs2", "arg"], comb.rows())
    out.meta.update(captured_weight=comb.captured_weight, n_samples=comb.n_samples)


def cmd_overlap_map(cfg: RunConfig, out: Output) -> None:
    grid = cfg.grid if cfg.grid is not None else np.linspace(0.5, 10 * math.pi, 40)
    combs = [_comb(cfg, A) for A in grid]
    out.table("overlap_map", ["A", "delta_s", "g2"], overlap_map(combs, _delays_over_period(cfg)), plot="map")


def cmd_optimal_delay(cfg: RunConfig, out: Output) -> None:
    grid = cfg.grid if cfg.grid is not None else [cfg.depth]
    rows = []
    for A in grid:
        o = optimal_delay(_comb(cfg, A))
        rows.append((A, o.delta_opt, o.delta_refined, o.result_analytic.overlap_abs, o.result.overlap_abs))
    out.table("optimal_delay", ["A", "delta_opt_s", "delta_refined_s", "overlap_analytic", "overlap_refined"], rows)


def cmd_g2_zero(cfg: RunConfig, out: Output) -> None:
    grid = cfg.grid if cfg.grid is not None else [cfg.depth]
    rows = []
    for A in grid:
        comb = sideband_coefficients(sawtooth(A, cfg.omega), cfg.epsilon)
        d = cfg.delay_for(A)
        g2f = g2_floquet_zero(comb, comb, d) if cfg.method in ("floquet", "both") else math.nan
        g2m = master_g2_zero(*source_pair(cfg.system(), A, d))[0] if cfg.method in ("master", "both") else math.nan
        shaper = 0.5 * (1.0 - pulse_shaper_overlap(comb) ** 2)
        rows.append((A, d, g2f, g2m, shaper))
    out.table("g2_zero", ["A", "delta_s", "g2_floquet", "g2_master", "g2_pulse_shaper"], rows)


def _curve(cfg: RunConfig, A: float):
    d = cfg.delay_for(A)
    return g2_curve(*source_pair(cfg.system(), A, d), tau_max=cfg.tau_max_periods * cfg.period)


def cmd_g2_tau(cfg: RunConfig, out: Output) -> None:
    curve = _curve(cfg, cfg.depth)
    out.table("g2_tau", ["tau_s", "g2"], curve.rows(), plot="xy")
    out.json("g2_tau_params.json", _plain(curve.sidecar()))


def cmd_compare(cfg: RunConfig, out: Output, grid=None) -> None:
    grid = grid if grid is not None else (cfg.grid if cfg.grid is not None else np.linspace(0.5, 10 * math.pi, 16))
    rec: list = []
    rows = floquet_vs_master(grid, cfg.system(), jobs=cfg.jobs, record=rec)
    out.table("compare" if cfg.command == "compare" else "fig4b", ["A", "g2_floquet", "g2_master"],
              rows.tolist(), plot="xy")
    out.meta["max_abs_difference"] = float(np.max(np.abs(rows[:, 1] - rows[:, 2]))) if len(rows) else 0.0
    out.meta["hygiene"] = _hygiene_summary(rec)


def _hygiene_summary(records) -> dict:
    runs = [r[s] for r in records for s in ("a", "b")]
    if not runs:
        return {}
    return {"max_trace_drift": max(r["trace_drift"] for r in runs),
            "min_eigenvalue": min(r["min_eigenvalue"] for r in runs),
            "max_leakage": max(r["leakage"] for r in runs)}


def reproduce(figure: str, cfg: RunConfig, out: Output) -> dict:
    """Write one figure's data grid, plot script and metadata into ``out``."""
    W, T = cfg.omega, cfg.period
    if figure == "fig2":
        grid = cfg.grid if cfg.grid is not None else np.linspace(0.1 * math.pi, 10 * math.pi, 100)
        rows = []
        for A in grid:
            comb = sideband_coefficients(parabolic(A, W), cfg.epsilon)
            red = abs(asymptotic_sideband(A, 1)) ** 2 if A > 0 else math.nan
            rows.extend((A, n, abs(comb[n]) ** 2, red) for n in range(0, 6))
        out.table("fig2", ["A", "n", "abs2_s_n", "abs2_asymptotic"], rows, plot="by_n")
    elif figure == "fig3a":
        A = cfg.depth
        comb = sideband_coefficients(parabolic(A, W), cfg.epsilon)
        out.table("fig3a", ["A", "delta_s", "n", "dphi_rad"], phase_map(comb, _delays_over_period(cfg), 12))
        out.meta["delta_opt_s"] = analytic_optimal_delay(A, W)
    elif figure == "fig3b":
        A = cfg.depth
        comb = sideband_coefficients(parabolic(A, W), cfg.epsilon)
        deltas = np.arange(1000) * (T / 1000)
        out.table("fig3b", ["delta_s", "overlap"], zip(deltas.tolist(), delay_scan(comb, comb, deltas).tolist()),
                  plot="xy")
        o = optimal_delay(comb)
        out.meta.update(delta_opt_s=o.delta_opt, delta_refined_s=o.delta_refined,
                        overlap_at_delta_opt=o.result_analytic.overlap_abs)
    elif figure == "fig4a":
        grid = cfg.grid if cfg.grid is not None else np.linspace(0.5, 10 * math.pi, 40)
        deltas = np.arange(cfg.delay_count) * (0.5 * T / cfg.delay_count)
        if cfg.method == "floquet":
            combs = [sideband_coefficients(sawtooth(A, W), cfg.epsilon) for A in grid]
            rows = overlap_map(combs, deltas)
        else:
            rows = [(A, d, master_g2_zero(*source_pair(cfg.system(), A, d))[0]) for A in grid for d in deltas]
        out.table("fig4a", ["A", "delta_s", "g2"], rows, plot="map")
        out.meta["method"] = cfg.method
    elif figure == "fig4b":
        cmd_compare(cfg, out, grid=cfg.grid if cfg.grid is not None else np.linspace(0.5, 10 * math.pi, 16))
    elif figure == "fig4c":
        rows, zeros = [], {}
        for A in (cfg.grid if cfg.grid is not None else [1.0, 4.0, 10.0]):
            curve = _curve(cfg, A)
            rows.extend((A, t, g) for t, g in curve.rows())
            zeros[f"{A:.17g}"] = curve.g2_zero
        out.table("fig4c", ["A", "tau_s", "g2"], rows, plot="grouped")
        out.meta["g2_zero"] = zeros
    else:
        raise ValueError(f"unknown figure {figure!r}")
    return out.meta


HANDLERS = {
    "sidebands": cmd_sidebands,
    "overlap-map": cmd_overlap_map,
    "optimal-delay": cmd_optimal_delay,
    "g2-zero": cmd_g2_zero,
    "g2-tau": cmd_g2_tau,
    "compare": cmd_compare,
}


def run(cfg: RunConfig, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    out = Output(outdir, cfg.fmt)
    if cfg.command == "reproduce":
        reproduce(cfg.figure, cfg, out)
    else:
        HANDLERS[cfg.command](cfg, out)
    manifest = out.manifest(cfg)
    dump_json(manifest, outdir / "manifest.json")
    return manifest


def verify(cfg: RunConfig) -> dict:
    path = cfg.out / "manifest.json"
    if not path.exists():
        raise VerificationError(f"no manifest at {path}")
    old = json.loads(path.read_text())
    with tempfile.TemporaryDirectory() as tmp:
        new = run(cfg, Path(tmp))
    want = {f["name"]: f["sha256"] for f in old["files"]}
    got = {f["name"]: f["sha256"] for f in new["files"]}
    bad = sorted(n for n in set(want) | set(got) if want.get(n) != got.get(n))
    on_disk = sorted(n for n in want if not (cfg.out / n).exists() or sha256_file(cfg.out / n) != want[n])
    if bad or on_disk or old.get("parameters") != new.get("parameters"):
        raise VerificationError(f"mismatch: recomputed {bad}, on disk {on_disk}")
    return new


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_ARGS
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        print(f"spfc: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    try:
        if cfg.verify:
            verify(cfg)
            print(f"verified {cfg.out / 'manifest.json'}")
        else:
            manifest = run(cfg, cfg.out)
            for f in manifest["files"]:
                print(cfg.out / f["name"])
    except VerificationError as exc:
        print(f"spfc: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except NUMERIC_ERRORS as exc:
        print(f"spfc: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"spfc: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"spfc: I/O error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
