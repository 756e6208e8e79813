"""Command line interface: ``multimoment {convergence,stability,run,export,opcount}``."""
import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import math
import os
import sys

import numpy as np

from . import harness
from .analysis import stability_scan
from .reference import FDTD4_CFL_LIMIT
from .scheme import CFLError, NumericalFailure, run_multimoment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
INITIAL_CONDITIONS = ("planewave4", "sharp_square", "hidden_resolution")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "multimoment"
    N: tuple = (50, 100, 150, 200)
    lam: float = 1.0
    sigma_inv2: float = 500.0
    ic: str = "planewave4"
    T: float = None
    steps: int = None
    eps: float = 1.0
    mu: float = 1.0
    init: str = "exact"
    out: str = "out"
    grid: int = 101
    samples: int = 8
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    seed: int = 0

    def validate(self, need_time=False, check_cfl=True):
        if self.scheme not in harness.SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.ic not in INITIAL_CONDITIONS:
            raise ConfigError(f"unknown initial condition {self.ic!r}")
        if self.init not in ("exact", "fd"):
            raise ConfigError(f"unknown init mode {self.init!r}")
        if self.T is not None and self.steps is not None:
            raise ConfigError("set only one of T and steps")
        if need_time and self.T is None and self.steps is None:
            raise ConfigError("one of T or steps is required")
        limit = FDTD4_CFL_LIMIT if self.scheme == "fdtd4" else 1.0
        if not check_cfl:
            limit = math.inf
        if not 0 < self.lam <= limit * (1 + 1e-12):
            raise ConfigError(f"lambda {self.lam} outside (0, {limit:.6g}] for {self.scheme}")
        if not self.N or min(self.N) < 4:
            raise ConfigError("N must be at least 4")
        if self.sigma_inv2 <= 0 or self.eps <= 0 or self.mu <= 0:
            raise ConfigError("sigma-inv2, eps and mu must be positive")
        if self.samples < 2 or self.grid < 2 or self.threads < 1:
            raise ConfigError("samples and grid must be >= 2, threads >= 1")
        return self


# flag name -> (RunConfig field, converter)
def _int_list(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


_KEYS = {
    "scheme": ("scheme", str),
    "N": ("N", _int_list),
    "lambda": ("lam", lambda s: _parse_float(s)),
    "sigma-inv2": ("sigma_inv2", float),
    "ic": ("ic", str),
    "T": ("T", float),
    "steps": ("steps", int),
    "eps": ("eps", float),
    "mu": ("mu", float),
    "init": ("init", str),
    "out": ("out", str),
    "grid": ("grid", int),
    "samples": ("samples", int),
    "threads": ("threads", int),
    "seed": ("seed", int),
}


def _parse_float(s):
    """Float, also accepting ``1/sqrt(2)`` style CFL numbers."""
    s = str(s).strip().replace(" ", "")
    if s in ("1/sqrt(2)", "1/sqrt2", "sqrt(2)/2"):
        return 1.0 / math.sqrt(2.0)
    return float(s)


def read_config_file(path):
    """``key=value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = (p.strip() for p in line.split("=", 1))
            k = k.lstrip("-").replace("_", "-")
            k = {"lam": "lambda", "n": "N", "t": "T"}.get(k, k)
            if k not in _KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {k!r}")
            out[k] = v
    return out


def build_config(args, defaults=None):
    """Merge defaults, config file and explicit flags (flags win)."""
    raw = dict(defaults or {})
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in _KEYS:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            raw[key] = val
    kw = {}
    for key, val in raw.items():
        name, conv = _KEYS[key]
        try:
            kw[name] = conv(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    return RunConfig(**kw)


def _manifest(cfg, command):
    os.makedirs(cfg.out, exist_ok=True)
    conf = asdict(cfg)
    conf["N"] = list(cfg.N)
    harness.write_manifest(os.path.join(cfg.out, "manifest.json"), command, conf)


def _study_one(args):
    scheme, lam, sigma_inv2, N, T, init = args
    spec = harness.PlaneWaveSpec(sigma_inv2)
    return harness.run_plane_wave(scheme, lam, N, spec, init=init, T=T)[1]


def cmd_convergence(cfg):
    T = 1.0 if cfg.T is None else cfg.T
    if cfg.steps is not None:
        raise ConfigError("convergence runs are set by T, not steps")
    Ns = sorted(cfg.N)
    jobs = [(cfg.scheme, cfg.lam, cfg.sigma_inv2, N, T, cfg.init) for N in Ns]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(jobs))) as ex:
            reports = list(ex.map(_study_one, jobs))
    else:
        reports = [_study_one(j) for j in jobs]
    table = harness.ConvergenceTable(reports)
    harness.write_convergence_csv(os.path.join(cfg.out, "convergence.csv"), table)
    print(f"{'N':>5} {'eps1':>12} {'order':>6} {'eps2':>12} {'order':>6}")
    for N, e1, o1, e2, o2 in table.rows():
        o1s = "" if o1 is None else f"{o1:.2f}"
        o2s = "" if o2 is None else f"{o2:.2f}"
        print(f"{N:>5} {e1:>12.4e} {o1s:>6} {e2:>12.4e} {o2s:>6}")


def cmd_stability(cfg):
    scan = stability_scan(cfg.lam, cfg.grid, cfg.eps, cfg.mu)
    path = os.path.join(cfg.out, "stability.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta1", "theta2", "max_abs_eig"])
        for t1, t2, m in scan.rows():
            w.writerow([harness.fmt(t1), harness.fmt(t2), harness.fmt(m)])
    status = "stable" if scan.global_max <= 1 + 1e-9 else "UNSTABLE"
    print(f"lambda={scan.lam:.6g} grid={cfg.grid} max|eig|={scan.global_max:.6e} {status}")


def _write_field(path, state, values):
    X, Y = state.coords()
    harness.write_surface_csv(path, X, Y, values)


def cmd_run(cfg):
    if cfg.ic == "sharp_square":
        if cfg.scheme != "multimoment":
            raise ConfigError("sharp_square runs use the multi-moment scheme")
        T = cfg.T if cfg.T is not None else (cfg.steps or 25) * cfg.lam * 0.01
        times = sorted({t for t in (0.15, 0.25) if t <= T + 1e-12} | {T})
        snaps = harness.run_sharp_profile(0.01, cfg.lam, times)
        for t, snap in snaps.items():
            _write_field(os.path.join(cfg.out, f"h_T{t:.4f}.csv"), snap["state"], snap["h"])
            print(f"T={t:.4f} overshoot={snap['overshoot']:.3e} undershoot={snap['undershoot']:.3e}")
        return
    N = cfg.N[0]
    if cfg.ic == "hidden_resolution":
        if cfg.scheme != "multimoment":
            raise ConfigError("hidden_resolution runs use the multi-moment scheme")
        steps = cfg.steps if cfg.steps is not None else round((cfg.T or 10 / N) * N / cfg.lam)
        state = run_multimoment(harness.init_hidden_resolution(N), cfg.lam, steps)
        np.savez(os.path.join(cfg.out, "state.npz"), h=state.h, ex=state.ex, ey=state.ey)
        _write_field(os.path.join(cfg.out, "h.csv"), state, state.h[..., 0])
        print(f"hidden_resolution N={N} steps={steps} t={state.t:.6g}")
        return
    spec = harness.PlaneWaveSpec(cfg.sigma_inv2)
    T = 1.0 if cfg.T is None else cfg.T
    state, rep = harness.run_plane_wave(cfg.scheme, cfg.lam, N, spec, steps=cfg.steps,
                                        init=cfg.init, T=T)
    h = state.h[..., 0] if cfg.scheme == "multimoment" else state.h
    if cfg.scheme == "fdtd4":
        harness.write_surface_csv(os.path.join(cfg.out, "h.csv"), *state.positions("h"), h)
    else:
        _write_field(os.path.join(cfg.out, "h.csv"), state, h)
    print(f"{rep.scheme} N={rep.N} steps={rep.steps} t={rep.T:.6g} "
          f"eps1={rep.eps1:.4e} eps2={rep.eps2:.4e}")


def cmd_export(cfg):
    if cfg.ic != "hidden_resolution" or cfg.scheme != "multimoment":
        raise ConfigError("export reconstructs the multi-moment hidden_resolution run")
    N = cfg.N[0]
    steps = cfg.steps if cfg.steps is not None else round((cfg.T or 10 / N) * N / cfg.lam)
    state = run_multimoment(harness.init_hidden_resolution(N), cfg.lam, steps)
    surf = harness.export_bicubic(state, cfg.samples)
    lin = harness.export_bilinear(state.h[..., 1], cfg.samples)
    path = os.path.join(cfg.out, "bicubic.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "h", "dxh", "dxh_bilinear"])
        for row in zip(*(np.ravel(a) for a in (surf["x"], surf["y"], surf["value"],
                                                 surf["dx_value"], lin))):
            w.writerow([harness.fmt(v) for v in row])
    print(f"bicubic surface {surf['value'].shape} samples={cfg.samples} "
          f"TV(dxh bicubic)={harness.total_variation(surf['dx_value']):.6g} "
          f"TV(dxh bilinear)={harness.total_variation(lin):.6g}")


def cmd_opcount(cfg):
    N = cfg.N[0]
    steps = cfg.steps if cfg.steps is not None else N
    rep = harness.op_count_report(N, steps)
    print(f"per-node FMA: {rep['per_node']} (h {rep['h']}, ex {rep['ex']}, ey {rep['ey']})")
    print(f"total FMA for N={N}, steps={steps}: {rep['total']} ({rep['total']:.3g})")
    with open(os.path.join(cfg.out, "opcount.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "steps", "per_node", "total"])
        w.writerow([N, steps, rep["per_node"], rep["total"]])


COMMANDS = {
    "convergence": (cmd_convergence, {}),
    "stability": (cmd_stability, {}),
    "run": (cmd_run, {"N": "100"}),
    "export": (cmd_export, {"ic": "hidden_resolution", "N": "40", "steps": "10"}),
    "opcount": (cmd_opcount, {"N": "50"}),
}


def build_parser():
    p = argparse.ArgumentParser(prog="multimoment", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key=value file; flags override it")
        s.add_argument("--scheme", choices=harness.SCHEMES)
        s.add_argument("--lambda", dest="lambda", help="CFL number c*dt/dx")
        s.add_argument("--sigma-inv2", dest="sigma_inv2")
        s.add_argument("--N", help="grid size, or comma list for convergence")
        time = s.add_mutually_exclusive_group()
        time.add_argument("--T")
        time.add_argument("--steps")
        s.add_argument("--ic", choices=INITIAL_CONDITIONS)
        s.add_argument("--init", choices=("exact", "fd"))
        s.add_argument("--eps")
        s.add_argument("--mu")
        s.add_argument("--grid", help="theta samples per axis for stability")
        s.add_argument("--samples", help="samples per cell edge for export")
        s.add_argument("--out")
        s.add_argument("--threads")
        s.add_argument("--seed")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    func, defaults = COMMANDS[args.command]
    try:
        cfg = build_config(args, defaults)
        # stability scans deliberately probe lambda past the CFL limit
        cfg.validate(check_cfl=args.command != "stability")
        _manifest(cfg, list(sys.argv[1:] if argv is None else argv))
        func(cfg)
    except (ConfigError, CFLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
