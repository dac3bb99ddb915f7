"""Command-line front end: every run writes CSV data plus a JSON manifest.

Exit codes: 0 success, 2 invalid configuration, 3 inadequate Fock cutoff.
Settings resolve as command-line flags > ``--config`` file > defaults.
The output directory defaults to ``$JCGATE_OUTPUT_DIR`` or the working
directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import budget, error, fock, jc, optimize, protocol
from .exceptions import CutoffError, UnsupportedGateError

OUTPUT_ENV = "JCGATE_OUTPUT_DIR"

COMMON_DEFAULTS = {"output_dir": None, "prefix": None}

DEFAULTS = {
    "optimal-state": {
        "gate": None, "gT": None, "n_bar": None, "n_cut": None, "kind": "avg",
        "wigner_grid": 0, "wigner_extent": None,
    },
    "error-scan": {
        "gate": None, "family": "squeezed", "n_bar": "25,50,100,200,400", "r": None, "n_cut": None,
    },
    "protocol": {
        "n_bar": 100.0, "r": protocol.LN_SQRT_PI_2, "gate": "Xpi", "M": 0, "cycles": 100,
        "n_cut": None, "seed": 0, "seeds": 1, "workers": None, "time_convention": "sqrt",
        "method": "density", "n_traj": 64, "record_every": 1, "ghz_N": "1",
    },
    "budget": {k: v for k, v in budget.BudgetParams().as_dict().items()} | {"json": False},
}

TYPES = {
    "gT": float, "n_bar": str, "n_cut": int, "wigner_grid": int, "wigner_extent": float,
    "r": complex, "M": int, "cycles": int, "seed": int, "seeds": int, "workers": int,
    "n_traj": int, "record_every": int, "N_q": float, "T_pi": float, "T_CZ": float,
    "T_M": float, "P_pi": float, "P_CZ": float, "P_M": float, "omega": float,
    "attenuation_factor": float, "target_error": float,
}


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits so that output files are reproducible bit for bit."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    return x


def config_hash(cfg: dict) -> str:
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, ``[sections]`` are ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _coerce(key, value):
    if value is None:
        return None
    kind = TYPES.get(key)
    try:
        if kind is complex:
            return complex(str(value).replace(" ", ""))
        if kind is not None and not isinstance(value, kind):
            return kind(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    if key == "json" and isinstance(value, str):
        return value.lower() in ("1", "true", "yes")
    return value


def resolve(defaults: dict, file_cfg: dict, flags: dict) -> dict:
    cfg = dict(COMMON_DEFAULTS) | dict(defaults)
    for source in (file_cfg, flags):
        for key, value in source.items():
            if key in cfg:
                cfg[key] = value
    return {k: _coerce(k, v) for k, v in cfg.items()}


def _float_list(text) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _int_list(text) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _gate(name):
    if name is None:
        raise ConfigError("--gate is required")
    try:
        return jc.parse_gate(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- output --------------------------------------------------------------------


class Writer:
    def __init__(self, cfg, command):
        out = cfg["output_dir"] or os.environ.get(OUTPUT_ENV) or "."
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.prefix = cfg["prefix"] or command
        self.files = {}

    def path(self, suffix):
        return self.dir / f"{self.prefix}{suffix}"

    def csv(self, suffix, header, rows):
        p = self.path(suffix)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self.files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        return p

    def manifest(self, command, cfg, results=None):
        clean = {k: v for k, v in cfg.items() if k not in ("output_dir",)}
        data = {
            "command": command,
            "config": _jsonable(clean),
            "config_hash": config_hash(clean),
            "outputs": self.files,
        }
        if results is not None:
            data["results"] = _jsonable(results)
        p = self.path(".json")
        p.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return data


# -- subcommands -----------------------------------------------------------------


def cmd_optimal_state(cfg):
    theta, phi = _gate(cfg["gate"])
    K = jc.rotation(theta, phi)
    if cfg["gT"] is None and cfg["n_bar"] is None:
        raise ConfigError("give --gT or --n-bar")
    if cfg["gT"] is not None:
        gT = float(cfg["gT"])
        if gT <= 0:
            raise ConfigError("gT must be positive")
        target = (abs(theta) / (2 * gT)) ** 2
    else:
        target = float(cfg["n_bar"])
        if target <= 0:
            raise ConfigError("n_bar must be positive")
        gT = jc.rotation_time(theta, target)
    n_cut = cfg["n_cut"] or max(fock.required_cutoff(target), 16)
    fock.check_cutoff(target, n_cut)
    if cfg["kind"] == "avg":
        F = error.error_operator_average(K, gT, n_cut)
    elif cfg["kind"] == "min":
        if error.is_equatorial_pi_rotation(K) is None:
            raise ConfigError("--kind min needs an xy-plane pi rotation")
        F = error.error_operator_min(phi, gT, n_cut, gate=K)
    else:
        raise ConfigError("--kind must be avg or min")
    opt = optimize.optimal_drive_state(F)
    alpha, r, resid = optimize.characterize_state(opt.state)
    w = Writer(cfg, "optimal-state")
    w.csv("_amplitudes.csv", ["n", "re", "im"],
          [(n, a.real, a.imag) for n, a in enumerate(opt.state)])
    if cfg["wigner_grid"]:
        k = int(cfg["wigner_grid"])
        ext = cfg["wigner_extent"] or abs(alpha) + 3.0
        xs = np.linspace(-ext, ext, k)
        pts = xs[None, :] + 1j * xs[:, None]
        wig = fock.wigner_grid(opt.state, pts)
        w.csv("_wigner.csv", ["x", "p", "W"],
              [(pts[i, j].real, pts[i, j].imag, wig[i, j]) for i in range(k) for j in range(k)])
    results = {
        "gT": gT, "n_cut": n_cut, "fidelity": opt.fidelity, "error": opt.error,
        "mean_photon": fock.mean_photon(opt.state), "alpha": alpha, "r": r,
        "fit_residual": resid, "degenerate": opt.degenerate, "eigen_residual": opt.residual,
    }
    return w.manifest("optimal-state", cfg, results)


def _family_state(family, n_bar, r, n_cut):
    alpha = np.sqrt(n_bar)
    if family == "coherent":
        return fock.coherent_state(alpha, n_cut)
    if family == "squeezed":
        return fock.squeezed_coherent_state(alpha, r, n_cut)
    if family == "cat":
        return fock.squeezed_cat_state(alpha, r, 1, n_cut)
    raise ConfigError("--family must be coherent, squeezed or cat")


def _analytic(theta, family, n_bar, which):
    fam = "squeezed" if family == "cat" and which == "avg" else family
    try:
        return error.analytic_error(theta, fam, n_bar, which)[0]
    except UnsupportedGateError:
        return float("nan")


def cmd_error_scan(cfg):
    theta, phi = _gate(cfg["gate"])
    K = jc.rotation(theta, phi)
    family = cfg["family"]
    if family not in ("coherent", "squeezed", "cat"):
        raise ConfigError("--family must be coherent, squeezed or cat")
    n_bars = _float_list(cfg["n_bar"])
    if not n_bars or min(n_bars) <= 0:
        raise ConfigError("--n-bar needs positive values")
    if cfg["r"] is not None:
        r = complex(cfg["r"])
    elif family == "coherent":
        r = 0.0
    else:
        try:
            r = error.analytic_error(theta, "squeezed", 1.0, "avg", phi)[1]
        except UnsupportedGateError:
            r = error.LN_SQRT_PI_2 * np.exp(2j * phi)
    rows = []
    for n_bar in n_bars:
        n_cut = cfg["n_cut"] or fock.required_cutoff(n_bar + np.sinh(abs(r)) ** 2, r=r)
        state = _family_state(family, n_bar, r, n_cut)
        # the field points along the gate axis
        state = state * np.exp(1j * phi * np.arange(n_cut)) if phi else state
        gT = jc.rotation_time(theta, n_bar)
        e_avg = error.average_error(K, gT, state)
        e_min, e_max, _, _ = error.sphere_error_range(K, gT, state)
        a_avg = _analytic(theta, family, n_bar, "avg")
        a_max = _analytic(theta, family, n_bar, "max")
        rows.append((n_bar, n_cut, e_min, e_avg, e_max, a_avg, a_max, e_avg - a_avg, e_max - a_max))
    w = Writer(cfg, "error-scan")
    w.csv(".csv", ["n_bar", "n_cut", "min_error", "avg_error", "max_error",
                   "analytic_avg", "analytic_max", "delta_avg", "delta_max"], rows)
    return w.manifest("error-scan", cfg, {"rows": len(rows)})


def _protocol_config(cfg, variant, seed, ghz_n=1):
    theta, phi = _gate(cfg["gate"])
    try:
        return protocol.ProtocolConfig(
            n_bar=float(cfg["n_bar"]), r=complex(cfg["r"]), theta=theta, phi=phi, M=cfg["M"],
            cycles=cfg["cycles"], n_cut=cfg["n_cut"], seed=seed, variant=variant,
            ghz_N=ghz_n, time_convention=cfg["time_convention"], method=cfg["method"],
            n_traj=cfg["n_traj"], record_every=cfg["record_every"],
        )
    except CutoffError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run_one(args):
    variant, pc = args
    runner = protocol.run_full if variant == "full" else protocol.run_ideal
    return runner(pc)


def _map(func, jobs, workers):
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves job order, so output is independent of scheduling
        return list(pool.map(func, jobs))


RECORD_HEADER = ["cycle", "E", "avg_error", "purity", "mean_photon"]


def _record_rows(records):
    return [(r.cycle, r.energy_per_gate, r.avg_error, r.purity, r.mean_photon) for r in records]


def cmd_protocol(cfg, variant):
    if cfg["seeds"] < 1:
        raise ConfigError("--seeds must be >= 1")
    command = f"protocol-{variant}"
    try:
        cfg = cfg | {"n_bar": float(cfg["n_bar"])}
    except ValueError as exc:
        raise ConfigError(f"bad value for n_bar: {cfg['n_bar']!r}") from exc
    seeds = [cfg["seed"] + k for k in range(cfg["seeds"])]
    w = Writer(cfg, command)
    if variant == "ghz":
        return _cmd_ghz(cfg, w)
    configs = [_protocol_config(cfg, variant, s) for s in seeds]
    runs = _map(_run_one, [(variant, pc) for pc in configs], cfg["workers"])
    for s, recs in zip(seeds, runs):
        w.csv(f"_seed{s}.csv", RECORD_HEADER, _record_rows(recs))
    if len(runs) > 1:
        mean = []
        for rows in zip(*runs):
            mean.append((rows[0].cycle, rows[0].energy_per_gate,
                         float(np.mean([r.avg_error for r in rows])),
                         float(np.mean([r.purity for r in rows])),
                         float(np.mean([r.mean_photon for r in rows]))))
        w.csv("_mean.csv", RECORD_HEADER, mean)
    final = [r[-1].avg_error for r in runs]
    return w.manifest(command, cfg | {"seed_list": seeds},
                      {"final_avg_error": float(np.mean(final)), "n_cut": configs[0].n_cut})


def _ghz_job(args):
    pc = args
    e_ghz, e_eff = protocol.run_ghz(pc)
    d_ghz, d_eff = protocol.ghz_disposable_error(pc.ghz_N, pc.n_bar, pc.theta, pc.phi, pc.r)
    t_ghz, t_eff = protocol.ghz_disposable_error(pc.ghz_N, pc.n_bar / pc.ghz_N, pc.theta, pc.phi, pc.r)
    return (pc.ghz_N, pc.M, e_ghz, e_eff, d_eff, t_eff)


def _cmd_ghz(cfg, w):
    ns = _int_list(cfg["ghz_N"])
    if not ns or min(ns) < 1:
        raise ConfigError("--ghz-N needs positive integers")
    configs = [_protocol_config(cfg, "ghz", cfg["seed"], n) for n in ns]
    rows = _map(_ghz_job, configs, cfg["workers"])
    w.csv(".csv", ["N", "M", "E_ghz", "E_eff", "E_eff_disposable", "E_eff_disposable_total"], rows)
    return w.manifest("protocol-ghz", cfg, {"rows": len(rows)})


def cmd_budget(cfg):
    try:
        params = budget.BudgetParams(**{k: cfg[k] for k in budget.BudgetParams().as_dict()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    table = budget.budget_table(params)
    w = Writer(cfg, "budget")
    w.csv(".csv", ["quantity", "unit", "exact", "rounded"],
          [(r["quantity"], r["unit"], r["exact"], r["rounded"]) for r in table])
    data = w.manifest("budget", cfg, {"table": table})
    if cfg["json"]:
        print(json.dumps(data["results"]["table"], indent=2))
    else:
        print(f"{'quantity':<20}{'exact':>24}{'rounded':>24}  unit")
        for r in table:
            print(f"{r['quantity']:<20}{fmt(r['exact']):>24}{fmt(r['rounded']):>24}  {r['unit']}")
    return data


# -- argument parsing --------------------------------------------------------------


def _add(p, *names, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*names, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    def common(p):
        _add(p, "--config", dest="config_file", help="key = value settings file")
        _add(p, "--output-dir", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
        _add(p, "--prefix", help="output file prefix")

    p = sub.add_parser("optimal-state", help="fidelity-optimal drive state")
    common(p)
    _add(p, "--gate", help="Xpi, Ypi, Xpi2, Ypi2, X-pi2 or R:theta:phi")
    _add(p, "--gT", type=float, help="interaction time g*T")
    _add(p, "--n-bar", dest="n_bar", help="target photon number (sets gT)")
    _add(p, "--n-cut", dest="n_cut", type=int)
    _add(p, "--kind", choices=["avg", "min"])
    _add(p, "--wigner-grid", dest="wigner_grid", type=int, help="points per axis")
    _add(p, "--wigner-extent", dest="wigner_extent", type=float)

    p = sub.add_parser("error-scan", help="min/avg/max error against photon number")
    common(p)
    _add(p, "--gate")
    _add(p, "--family", choices=["coherent", "squeezed", "cat"])
    _add(p, "--n-bar", dest="n_bar", help="comma-separated photon numbers")
    _add(p, "--r", help="squeezing (complex), default optimal")
    _add(p, "--n-cut", dest="n_cut", type=int)

    for variant in ("ideal", "ghz", "full"):
        p = sub.add_parser(f"protocol-{variant}", help=f"{variant} drive-refreshing protocol")
        common(p)
        _add(p, "--n-bar", dest="n_bar", type=float)
        _add(p, "--r", help="initial squeezing (complex)")
        _add(p, "--gate")
        _add(p, "--M", type=int, help="ancillas per cycle")
        _add(p, "--n-cut", dest="n_cut", type=int)
        _add(p, "--seed", type=int)
        _add(p, "--time-convention", dest="time_convention", choices=["sqrt", "linear"])
        _add(p, "--workers", type=int)
        if variant == "ghz":
            _add(p, "--ghz-N", dest="ghz_N", help="comma-separated register sizes")
        else:
            _add(p, "--cycles", type=int)
            _add(p, "--seeds", type=int, help="run seeds seed .. seed+k-1")
            _add(p, "--record-every", dest="record_every", type=int)
            if variant == "ideal":
                _add(p, "--method", choices=["density", "trajectories"])
                _add(p, "--n-traj", dest="n_traj", type=int)

    p = sub.add_parser("budget", help="power budget table")
    common(p)
    for name in budget.BudgetParams().as_dict():
        _add(p, f"--{name.replace('_', '-')}", dest=name, type=float)
    _add(p, "--json", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    file_cfg = {}
    try:
        if "config_file" in args:
            file_cfg = read_config_file(args.pop("config_file"))
        key = "protocol" if command.startswith("protocol-") else command
        cfg = resolve(DEFAULTS[key], file_cfg, args)
        if command == "optimal-state":
            result = cmd_optimal_state(cfg)
        elif command == "error-scan":
            result = cmd_error_scan(cfg)
        elif command == "budget":
            cmd_budget(cfg)
            return 0
        else:
            result = cmd_protocol(cfg, command.split("-", 1)[1])
    except CutoffError as exc:
        print(f"jcgate: cutoff error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, UnsupportedGateError, ValueError, OSError) as exc:
        parser.commands[command].print_usage(sys.stderr)
        print(f"jcgate {command}: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result.get("results", {}), indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
