"""Batch command-line front end.

Every command writes its artifacts into ``--out`` together with a
``manifest.json`` holding the resolved configuration, library versions and
SHA-256 checksums of the artifacts. Settings come from flags or from an INI
file given with ``--config`` (flags win)::

    [run]
    alpha = 0.25
    resolution = 2000
    k = 200
    seed = 7

    [domain]
    type = interval
    a = 0
    b = 1

Keys in ``[run]`` are the long flag names with dashes replaced by
underscores. ``[domain]`` takes ``type`` plus the fields of that domain:
``a, b`` (interval), ``lengths`` (box), ``center, radius`` (ball),
``center, r_inner, r_outer`` (annulus) or ``balls = c1,c2;R | c1,c2;R``
(union).

Exit codes: 0 success, 2 invalid configuration, 3 parameter outside the
admissible range, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from . import cycle_traces as ct
from . import field_sim as fs
from . import levy
from . import riesz_spectrum as rs
from . import rosenblatt as rd
from .domains import domain_from_dict, parse_domain
from .errors import NumericalError, ParameterRangeError

COMMANDS = ("spectrum", "traces", "cumulants", "cf", "density", "sample", "levy", "ou", "simulate", "converge")
STOCHASTIC = {"traces", "sample", "ou", "simulate", "converge"}

EXIT_CONFIG, EXIT_RANGE, EXIT_NUMERIC = 2, 3, 4

# option name -> (type, default); defaults of None are resolved per command
OPTIONS = {
    "domain": (str, None),
    "alpha": (float, None),
    "beta": (float, None),
    "gamma": (float, None),
    "resolution": (int, None),
    "k": (int, 200),
    "seed": (int, None),
    "workers": (int, 1),
    "out": (str, "."),
    "format": (str, "csv"),
    "z": (str, "0"),
    "x_min": (float, None),
    "x_max": (float, None),
    "points": (int, 801),
    "n": (int, None),
    "m_max": (int, 6),
    "n_mc": (int, 10**6),
    "u_min": (float, 1e-5),
    "u_max": (float, None),
    "horizon": (float, 20.0),
    "step": (float, 1e-2),
    "T": (float, 1024.0),
    "grid_step": (float, 1.0),
    "T_list": (str, "256,1024,4096"),
    "reps": (int, 500),
}
# keys that never change results and are left out of the manifest
_RUNTIME_ONLY = {"workers", "out"}


class ConfigError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run] and [domain] sections")
    for name in OPTIONS:
        flag = "--" + name.replace("_", "-")
        common.add_argument(flag, dest=name, default=None)
    parser = argparse.ArgumentParser(prog="rosenblatt-lrd", description="Riesz spectra, Rosenblatt-type laws and LRD field experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common])
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge INI file and flags into a typed configuration dict."""
    file_run, file_domain = {}, None
    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(args.config):
            raise ConfigError(f"cannot read config file {args.config!r}")
        if cp.has_section("run"):
            file_run = dict(cp.items("run"))
        if cp.has_section("domain"):
            file_domain = dict(cp.items("domain"))
        unknown = set(file_run) - set(OPTIONS)
        if unknown:
            raise ConfigError(f"unknown keys in [run]: {sorted(unknown)}")
    cfg = {"command": args.command}
    for name, (typ, default) in OPTIONS.items():
        raw = getattr(args, name)
        if raw is None:
            raw = file_run.get(name)
        try:
            cfg[name] = default if raw is None else typ(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    if cfg["domain"] is not None:
        cfg["domain_obj"] = parse_domain(cfg["domain"])
    elif file_domain is not None:
        cfg["domain_obj"] = _domain_from_ini(file_domain)
    else:
        cfg["domain_obj"] = None
    if cfg["format"] not in ("csv", "json", "binary"):
        raise ConfigError("format must be csv, json or binary")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if args.command in STOCHASTIC and cfg["seed"] is None:
        raise ConfigError(f"{args.command} needs an explicit --seed")
    if cfg["domain_obj"] is None:
        raise ConfigError("a domain is required (--domain or [domain] section)")
    if cfg["resolution"] is None:
        cfg["resolution"] = 2000 if cfg["domain_obj"].dim == 1 else 200
    return cfg


def _domain_from_ini(block: dict):
    if str(block.get("type", "")).lower() == "union":
        return parse_domain("union:" + block["balls"].replace(" ", ""))
    return domain_from_dict(block)


# -- output helpers ---------------------------------------------------------


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class Artifacts:
    def __init__(self, out: str, fmt: str):
        self.out = out
        self.fmt = fmt
        self.files: list[str] = []
        os.makedirs(out, exist_ok=True)

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.out, name)

    def json(self, name: str, payload) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def table(self, name: str, columns: dict, meta: dict | None = None) -> None:
        """Write equal-length columns as csv, json or float64 binary (+ JSON sidecar)."""
        keys = list(columns)
        cols = [np.asarray(columns[k]) for k in keys]
        if self.fmt == "csv":
            with open(self.path(name + ".csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(keys)
                for row in zip(*cols):
                    w.writerow([v if isinstance(v, str) else _num(v) for v in row])
            if meta is not None:
                self.json(name + ".json", meta)
        elif self.fmt == "json":
            payload = {k: [v if isinstance(v, str) else (int(v) if isinstance(v, np.integer) else float(v)) for v in c] for k, c in zip(keys, cols)}
            if meta is not None:
                payload["meta"] = meta
            self.json(name + ".json", payload)
        else:
            if any(c.dtype.kind not in "iuf" for c in cols):
                raise ConfigError(f"binary format is not available for the {name} table")
            data = np.column_stack([c.astype("<f8") for c in cols])
            data.tofile(self.path(name + ".bin"))
            side = {"columns": keys, "shape": list(data.shape), "dtype": "<f8", "order": "C"}
            if meta is not None:
                side["meta"] = meta
            self.json(name + ".json", side)

    def manifest(self, cfg: dict) -> None:
        config = {k: v for k, v in cfg.items() if k not in _RUNTIME_ONLY and k != "domain_obj"}
        config["domain"] = cfg["domain_obj"].to_dict()
        sums = {}
        for name in self.files:
            with open(os.path.join(self.out, name), "rb") as fh:
                sums[name] = hashlib.sha256(fh.read()).hexdigest()
        payload = {
            "config": config,
            "versions": {
                "rosenblatt_lrd": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "outputs": sums,
        }
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _complex(text: str) -> list[complex]:
    try:
        return [complex(t.replace("i", "j")) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated complex numbers, got {text!r}") from exc


def format_complex(v: complex) -> str:
    return f"{v.real:.16g}{v.imag:+.16g}i"


# -- commands ---------------------------------------------------------------


def _spec(cfg):
    if cfg["alpha"] is None:
        raise ConfigError("--alpha is required")
    return rd.build_spec(cfg["domain_obj"], cfg["alpha"], resolution=cfg["resolution"], K=cfg["k"])


def cmd_spectrum(cfg, art):
    if cfg["alpha"] is None:
        raise ConfigError("--alpha is required")
    spec = rs.eigenvalues(rs.RieszConfig(cfg["domain_obj"], cfg["alpha"], cfg["resolution"]), cfg["k"])
    lam = spec.eigenvalues
    meta = {
        "alpha": cfg["alpha"],
        "domain": cfg["domain_obj"].to_dict(),
        "resolution": cfg["resolution"],
        "nodes": spec.node_count,
        "n_reliable": spec.n_reliable,
        "diagonal_rule": spec.config.diagonal_rule,
    }
    art.table("spectrum", {"k": np.arange(1, lam.size + 1), "lambda_k": lam}, meta)


def cmd_traces(cfg, art):
    dom, alpha = cfg["domain_obj"], cfg["alpha"]
    if alpha is None:
        raise ConfigError("--alpha is required")
    spec = rs.eigenvalues(rs.RieszConfig(dom, alpha, cfg["resolution"]), cfg["k"])
    ests = []
    for m in range(2, cfg["m_max"] + 1):
        ests.append(ct.cycle_trace_spectral(spec, m))
        ests.append(ct.cycle_trace_mc(dom, alpha, m, n=cfg["n_mc"], seed=[cfg["seed"], m], workers=cfg["workers"]))
    art.table(
        "traces",
        {
            "m": [e.m for e in ests],
            "value": [e.value for e in ests],
            "stderr": [e.stderr for e in ests],
            "method": np.array([e.method for e in ests], dtype=object),
        },
    )


def cmd_cumulants(cfg, art):
    spec = _spec(cfg)
    kap = rd.cumulants(spec, cfg["m_max"])
    art.table("cumulants", {"m": np.arange(1, kap.size + 1), "kappa": kap}, {"K": spec.K, "tail_var": spec.tail_var})


def cmd_cf(cfg, art):
    spec = _spec(cfg)
    z = np.array(_complex(cfg["z"]))
    if np.any(np.abs(z.imag) > 0):
        raise ConfigError("cf is evaluated at real z only")
    vals = np.atleast_1d(rd.char_fn(spec, z.real))
    for v in vals:
        print(format_complex(complex(v)))
    art.table("cf", {"z": z.real, "re": vals.real, "im": vals.imag})


def cmd_density(cfg, art):
    spec = _spec(cfg)
    sd = math.sqrt(spec.kappa2)
    lo = cfg["x_min"] if cfg["x_min"] is not None else -4.0 * sd
    hi = cfg["x_max"] if cfg["x_max"] is not None else 12.0 * sd
    if not hi > lo or cfg["points"] < 2:
        raise ConfigError("need x_max > x_min and at least 2 points")
    x = np.linspace(lo, hi, cfg["points"])
    art.table("density", {"x": x, "density": rd.density(spec, x), "cdf": rd.cdf(spec, x)})


def cmd_sample(cfg, art):
    spec = _spec(cfg)
    n = cfg["n"] or 10**5
    art.table("samples", {"sample": rd.sample(spec, n, seed=cfg["seed"], workers=cfg["workers"])})


def cmd_levy(cfg, art):
    view = levy.LevyView(_spec(cfg))
    lam1 = float(view.lambdas[0])
    u_max = cfg["u_max"] if cfg["u_max"] is not None else 60.0 * lam1
    if not 0 < cfg["u_min"] < u_max:
        raise ConfigError("need 0 < u_min < u_max")
    u = np.geomspace(cfg["u_min"], u_max, cfg["points"])
    art.table("levy_density", {"u": u, "q": levy.levy_density(view, u)})
    atoms = levy.thorin_atoms(view)
    art.table("thorin_atoms", {"location": [a for a, _ in atoms], "mass": [m for _, m in atoms]})


def cmd_ou(cfg, art):
    view = levy.LevyView(_spec(cfg))
    n = cfg["n"] or 10**4
    draws = levy.sample_ou_stationary(view, n, horizon=cfg["horizon"], step=cfg["step"], seed=cfg["seed"], workers=cfg["workers"])
    art.table("ou_samples", {"sample": draws})


def _field_config(cfg, T=None):
    beta, gamma = cfg["beta"], cfg["gamma"]
    if beta is None or gamma is None:
        raise ConfigError("--beta and --gamma are required")
    if cfg["alpha"] is not None and abs(cfg["alpha"] - beta * gamma) > 1e-12:
        raise ConfigError("alpha must equal beta * gamma")
    return fs.FieldConfig(beta, gamma, cfg["T"] if T is None else T, cfg["grid_step"], cfg["domain_obj"])


def cmd_simulate(cfg, art):
    fc = _field_config(cfg)
    real = fs.simulate_field(fc, seed=cfg["seed"])
    meta = {"S_T": fs.functional_S_T(real), "clipped_mass": real.clipped_mass, "config": fc.to_dict()}
    if cfg["format"] == "binary":
        stem = os.path.join(art.out, "field")
        fs.write_realization(real, stem)
        art.files += ["field.bin", "field.json"]
        art.json("summary.json", meta)
        return
    nodes = fs._lattice_nodes(fc)
    cols = {f"x{i + 1}": nodes[:, i] for i in range(fc.d)}
    cols["value"] = real.values.ravel()
    cols["inside"] = real.mask.ravel().astype(int)
    art.table("field", cols, meta)


def cmd_converge(cfg, art):
    cfg = dict(cfg)
    if cfg["alpha"] is None and cfg["beta"] is not None and cfg["gamma"] is not None:
        cfg["alpha"] = cfg["beta"] * cfg["gamma"]
    spec = _spec(cfg)
    T_list = _floats(cfg["T_list"])
    base = _field_config(cfg, T=max(T_list))
    rows = fs.convergence_report(base, T_list, cfg["reps"], spec, seed=cfg["seed"], workers=cfg["workers"])
    art.table(
        "convergence",
        {
            "T": [r.T for r in rows],
            "ks": [r.ks for r in rows],
            "mean": [r.mean for r in rows],
            "var": [r.var for r in rows],
            "n_reps": [r.n_reps for r in rows],
        },
        {"kappa2": spec.kappa2},
    )


HANDLERS = {name: globals()["cmd_" + name] for name in COMMANDS}


def run(cfg: dict) -> int:
    art = Artifacts(cfg["out"], cfg["format"])
    HANDLERS[cfg["command"]](cfg, art)
    art.manifest(cfg)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(resolve(args))
    except ParameterRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
