"""
Command-line runner: ``python -m hopflink <subcommand> [options]``.

Every subcommand resolves its configuration from an optional JSON file
(``--config``) overridden by flags, echoes the resolved configuration and
its hash into the output, and writes JSON reports (stdout or ``--out``)
plus optional CSV tables.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 unsupported representation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import helicity as hel
from . import linkage as lk
from . import moments as mom
from . import spectral as spec
from .errors import ConfigError, DomainError, NumericalFailure, SingularityError, \
    UnsupportedRepresentation
from .fieldcore import (Ball, BeltramiField, FourierEnsemble, GridField, PeriodicBox,
                        RotationField, UniformField, field_from_dict)
from .tracer import reverse_check, trace

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNSUPPORTED = 0, 2, 3, 4

# config keys that carry units in their names, with the flag that overrides them
_KEYS = {
    "field": "field", "box_cm": "box", "T_magnetic": "T", "n_pairs": "pairs",
    "n_samples": "samples", "seed": "seed", "dcut_cm": "dcut", "quad_n": "quad_n",
    "tol": "tol", "workers": "workers", "s_max": "smax", "a_grid": "a",
    "T_schedule": "schedule", "x1_cm": "x1", "x2_cm": "x2", "x0_cm": "x0",
    "alpha": "alpha", "shells": "shells", "polarization": "pol", "modes_per_shell": "modes",
    "fit": "fit", "mode": "mode", "curves": "curves", "quantity": "quantity",
    "edges_file": "edges", "builtin": "builtin", "h_magnetic": "h",
}


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(s, n=None):
    if isinstance(s, (list, tuple)):
        vals = [float(v) for v in s]
    else:
        vals = [float(v) for v in str(s).replace(" ", "").split(",") if v]
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {s!r}")
    return vals


def _kv_args(text):
    pos, kw = [], {}
    for part in [p for p in text.split(",") if p]:
        if "=" in part:
            k, v = part.split("=", 1)
            kw[k.strip()] = v.strip()
        else:
            pos.append(part.strip())
    return pos, kw


def _shell_range(s):
    if isinstance(s, (list, tuple)):
        return int(s[0]), int(s[1])
    s = str(s)
    if ".." in s:
        lo, hi = s.split("..")
        return int(lo), int(hi)
    raise ConfigError(f"shell range must look like 1..12, got {s!r}")


def parse_field(spec_, box=None):
    """Build a field from a spec string or a dict.

    Strings: ``abc:A,B,C,k=K``, ``rotation[:R=..,omega=..]``,
    ``uniform:bx,by,bz``, ``ensemble:modes.json``, ``grid:data.csv``,
    ``kolmogorov:alpha=..,kmin=..,kmax=..,modes=..,pol=..,seed=..``.
    """
    if isinstance(spec_, dict):
        return field_from_dict(spec_)
    name, _, rest = str(spec_).partition(":")
    name = name.strip().lower()
    pos, kw = _kv_args(rest)
    try:
        if name == "abc":
            A, B, C = (float(v) for v in (pos + ["1", "1", "1"])[:3])
            k = float(kw.get("k", 1.0))
            dom = PeriodicBox(float(box)) if box else None
            return BeltramiField(A, B, C, k, dom)
        if name == "rotation":
            return RotationField(float(kw.get("R", 1.0)), float(kw.get("omega", 1.0)))
        if name == "uniform":
            b = [float(v) for v in pos] if pos else [0.0, 0.0, 1.0]
            dom = Ball(float(kw["R"])) if "R" in kw else PeriodicBox(float(box or 2 * np.pi))
            return UniformField(b, dom)
        if name == "ensemble":
            with open(pos[0]) as fh:
                return FourierEnsemble.from_dict(json.load(fh))
        if name == "grid":
            return GridField.from_csv(pos[0], kw.get("sidecar"))
        if name == "kolmogorov":
            L = float(box or 2 * np.pi)
            return spec.generate_ensemble(spec.SpectrumConfig(
                float(kw.get("alpha", 1.0)), float(kw.get("kmin", 1.0)),
                float(kw.get("kmax", 4.0)), int(kw.get("modes", 8)),
                kw.get("pol", "random"), int(kw.get("seed", 0)), L))
    except (KeyError, IndexError, ValueError) as exc:
        raise ConfigError(f"cannot parse field spec {spec_!r}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read field input: {exc}") from exc
    raise ConfigError(f"unknown field type {name!r}")


def default_T(field):
    """Magnetic time used when none is given: 4 periods for rigid rotation."""
    if isinstance(field, RotationField):
        return 4 * 2 * np.pi / abs(field.omega)
    return 200.0


# ---------------------------------------------------------------------------
# config resolution


def _resolve(args, defaults):
    cfg = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(_KEYS) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in file_cfg.items() if k in defaults or k in _KEYS})
    for key, flag in _KEYS.items():
        val = getattr(args, flag, None)
        if val is not None and val is not False:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _emit(args, cfg, result):
    doc = {"config": cfg, "config_hash": config_hash(cfg), "seed": cfg.get("seed"),
           "result": result}
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _field(cfg):
    return parse_field(cfg["field"], cfg.get("box_cm"))


def _check_positive(cfg, *keys):
    for k in keys:
        if k in cfg and cfg[k] is not None and not float(cfg[k]) > 0:
            raise ConfigError(f"{k} must be positive")


def _T(cfg, field):
    return float(cfg["T_magnetic"]) if cfg.get("T_magnetic") is not None else default_T(field)


# ---------------------------------------------------------------------------
# subcommands


def cmd_trace(args, cfg):
    field = _field(cfg)
    x0 = _floats(cfg["x0_cm"], 3)
    T = _T(cfg, field)
    if args.dry_run:
        return {"dry_run": True}
    line = trace(field, x0, T, cfg["tol"])
    if args.csv:
        line.to_csv(args.csv, field)
    return {"n_steps": line.n_steps, "T": line.T, "start": list(x0), "end": line.x[-1],
            "reverse_drift": reverse_check(field, x0, T, cfg["tol"]) if args.reverse else None}


def _named_curves(name):
    if name == "hopf":
        return lk.hopf_link()
    if name == "unlinked":
        return (lk.Loop.circle((0, 0, 0), (0, 0, 1), 1.0),
                lk.Loop.circle((0, 0, 10), (0, 0, 1), 1.0))
    raise ConfigError(f"unknown curve preset {name!r} (hopf, unlinked)")


def cmd_link(args, cfg):
    if cfg.get("curves"):
        c1, c2 = _named_curves(cfg["curves"])
        if args.dry_run:
            return {"dry_run": True}
        return {"curves": cfg["curves"], "linking": lk.closed_curve_linking(c1, c2)}
    field = _field(cfg)
    x1, x2 = _floats(cfg["x1_cm"], 3), _floats(cfg["x2_cm"], 3)
    T = _T(cfg, field)
    if args.dry_run:
        return {"dry_run": True}
    v = lk.segment_linking(field, x1, x2, T, cfg["quad_n"], cfg.get("dcut_cm"), tol=cfg["tol"])
    return {"lk": v, "lambda_T": v / T**2, "T": T}


def cmd_lambda(args, cfg):
    field = _field(cfg)
    if cfg.get("T_schedule"):
        sched = _floats(cfg["T_schedule"])
        x1, x2 = _floats(cfg["x1_cm"], 3), _floats(cfg["x2_cm"], 3)
        if args.dry_run:
            return {"dry_run": True}
        est = lk.asymptotic_linking(field, x1, x2, sched, cfg["quad_n"], cfg.get("dcut_cm"),
                                    tol=cfg["tol"])
        return est.to_dict()
    T = _T(cfg, field)
    n = int(cfg["n_pairs"])
    if n < 1:
        raise ConfigError("n_pairs must be >= 1")
    if args.dry_run:
        return {"dry_run": True}
    dist = lk.linking_distribution(field, n, T, cfg["seed"], cfg["quad_n"], cfg.get("dcut_cm"),
                                   cfg["tol"], cfg["workers"])
    if args.csv:
        dist.to_csv(args.csv)
    return {"T": T, "n_pairs": n, "n_failed": dist.n_failed, "values": dist.values,
            "errors": dist.errors, "mean": float(np.mean(dist.values)) if len(dist.values) else None}


def cmd_helicity(args, cfg):
    field = _field(cfg)
    mode = cfg.get("mode") or "spectral"
    if mode not in ("spectral", "pairs", "energy"):
        raise ConfigError("mode must be spectral, pairs or energy")
    T = _T(cfg, field)
    if args.dry_run:
        return {"dry_run": True}
    if mode == "spectral":
        chi = hel.helicity_spectral(field)
        return {"chi": chi, "energy": hel.energy(field), "arnold_ratio": hel.arnold_ratio(field, chi)}
    if mode == "energy":
        return {"energy": hel.energy(field)}
    est = hel.helicity_pairs(field, int(cfg["n_pairs"]), T, cfg["seed"], cfg["quad_n"],
                             cfg.get("dcut_cm"), cfg["tol"], cfg["workers"])
    return {"chi": est.value, "error": est.error, "estimate": est.to_dict()}


def cmd_quad(args, cfg):
    field = _field(cfg)
    T = _T(cfg, field)
    if args.dry_run:
        return {"dry_run": True}
    dist = lk.linking_distribution(field, int(cfg["n_pairs"]), T, cfg["seed"], cfg["quad_n"],
                                   cfg.get("dcut_cm"), cfg["tol"], cfg["workers"])
    chi2 = hel.quadratic_helicity_pairs(field, samples=dist)
    disp = hel.dispersion_pairs(field, samples=dist)
    return {"chi2": chi2.value, "chi2_err": chi2.error, "dispersion": disp.value,
            "dispersion_err": disp.error, "convention": "chi2 = 2 * integral of lambda^2"}


def cmd_bound(args, cfg):
    field = _field(cfg)
    if args.dry_run:
        return {"dry_run": True}
    est = hel.delta2_bound(field, int(cfg["n_samples"]), cfg["seed"], cfg.get("dcut_cm"))
    return {"delta2_bound": est.value, "error": est.error, "estimate": est.to_dict()}


def cmd_local_formula(args, cfg):
    field = _field(cfg)
    s_max = int(cfg["s_max"])
    a_grid = _floats(cfg["a_grid"])
    if s_max < 0 or any(a < 0 for a in a_grid):
        raise ConfigError("s_max and a must be nonnegative")
    if args.dry_run:
        return {"dry_run": True}
    terms = hel.local_formula_terms(field, s_max, int(cfg["n_samples"]), cfg["seed"],
                                    cfg.get("dcut_cm"), cfg.get("h_magnetic"))
    table = [{"a": a, "partial_sums": hel.local_formula_partial_sum(field, a, s_max, terms=terms)}
             for a in a_grid]
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("a," + ",".join(f"s{s}" for s in range(s_max + 1)) + "\n")
            for row in table:
                fh.write(",".join(repr(float(v)) for v in [row["a"], *row["partial_sums"]]) + "\n")
    return {"terms": {f"{i},{j}": {"value": t.value, "error": t.error,
                                   "near_diagonal_fraction": t.meta["near_diagonal_fraction"]}
                      for (i, j), t in terms.items()},
            "table": table}


def cmd_spectrum(args, cfg):
    L = float(cfg.get("box_cm") or 2 * np.pi)
    lo, hi = _shell_range(cfg["shells"])
    k0 = 2 * np.pi / L
    conf = spec.SpectrumConfig(float(cfg["alpha"]), lo * k0, hi * k0, int(cfg["modes_per_shell"]),
                               cfg["polarization"], int(cfg["seed"]), L)
    quantity = cfg.get("quantity") or cfg.get("fit") or "energy"
    if quantity not in spec.QUANTITIES:
        raise ConfigError(f"quantity must be one of {spec.QUANTITIES}")
    if args.dry_run:
        return {"dry_run": True}
    field = spec.generate_ensemble(conf)
    sp = spec.shell_spectrum(field, quantity)
    if args.csv:
        sp.to_csv(args.csv)
    if args.ensemble_out:
        with open(args.ensemble_out, "w") as fh:
            json.dump(field.to_dict(), fh, indent=1)
    out = {"quantity": quantity, "k": sp.k, "values": sp.values, "n_modes": len(field),
           "chi": hel.helicity_spectral(field), "energy": hel.energy(field)}
    if cfg.get("fit"):
        fit = spec.fit_slope(spec.shell_spectrum(field, cfg["fit"]))
        out["fit"] = {"quantity": cfg["fit"], "slope": fit.slope, "stderr": fit.stderr,
                      "n_used": fit.n_used, "n_excluded": fit.n_excluded}
    return out


def cmd_graph_check(args, cfg):
    if cfg.get("edges_file"):
        path = cfg["edges_file"]
        try:
            text = sys.stdin.read() if path == "-" else open(path).read()
        except OSError as exc:
            raise ConfigError(f"cannot read edge list: {exc}") from exc
        if args.dry_run:
            mom.parse_edge_list(text)
            return {"dry_run": True}
        return mom.check_edge_list(text)
    if args.dry_run:
        return {"dry_run": True}
    rows = mom.builtin_table()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("label,printed,computed,matches,bounded,product\n")
            for r in rows:
                fh.write(f"{r.label},{r.printed},{r.computed},{r.matches},{r.bounded},{r.product}\n")
    return {"rows": [r.to_dict() for r in rows], "summary": mom.table_summary(rows)}


def cmd_report(args, cfg):
    field = _field(cfg)
    T = _T(cfg, field)
    if args.dry_run:
        return {"dry_run": True}
    rep = hel.helicity_report(field, int(cfg["n_pairs"]), T, cfg["seed"], int(cfg["n_samples"]),
                              cfg["quad_n"], cfg.get("dcut_cm"), cfg["tol"], cfg["workers"])
    return rep.to_dict()


_COMMON = {"field": "abc:1,1,1,k=1", "box_cm": None, "seed": 0, "tol": 1e-8, "quad_n": 8,
           "dcut_cm": None, "workers": 1, "T_magnetic": None}

COMMANDS = {
    "trace": (cmd_trace, {"x0_cm": "0,0,0"}, "trace one field line"),
    "link": (cmd_link, {"x1_cm": "1,0,0", "x2_cm": "0.5,0,0.3", "curves": None},
             "linking of two closed curves or two field-line segments"),
    "lambda": (cmd_lambda, {"n_pairs": 10, "T_schedule": None, "x1_cm": "1,0,0",
                            "x2_cm": "0.5,0,0.3"},
               "asymptotic linking: distribution over random pairs or one pair's schedule"),
    "helicity": (cmd_helicity, {"mode": "spectral", "n_pairs": 200}, "helicity chi"),
    "quad": (cmd_quad, {"n_pairs": 200}, "quadratic helicity and dispersion"),
    "bound": (cmd_bound, {"n_samples": 20000}, "integral of the squared Gauss kernel"),
    "local-formula": (cmd_local_formula, {"s_max": 2, "a_grid": "0,0.1,0.3,1",
                                          "n_samples": 20000, "h_magnetic": None},
                      "partial sums of the local formula"),
    "spectrum": (cmd_spectrum, {"alpha": 1.0, "shells": "1..12", "polarization": "random",
                                "modes_per_shell": 32, "fit": None, "quantity": None},
                 "random ensemble shell spectrum and slope fit"),
    "graph-check": (cmd_graph_check, {"edges_file": None, "builtin": True},
                    "moment-graph boundedness and dimensions"),
    "report": (cmd_report, {"n_pairs": 200, "n_samples": 20000}, "full helicity report"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="hopflink", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, _, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_, description=help_)
        s.add_argument("--config", help="JSON config file; flags override its keys")
        s.add_argument("--out", help="write the JSON report here instead of stdout")
        s.add_argument("--dry-run", action="store_true", help="validate the config and exit")
        s.add_argument("--seed", type=int, help="random seed")
        s.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
        if name not in ("graph-check", "spectrum"):
            s.add_argument("--field", help="field spec, e.g. abc:1,1,1,k=1 | rotation | "
                           "ensemble:modes.json | grid:data.csv | kolmogorov:alpha=1,kmax=4")
            s.add_argument("--box", type=float, help="periodic box side (cm)")
            s.add_argument("--T", type=float, help="magnetic time per line")
            s.add_argument("--tol", type=float, help="integrator relative tolerance")
            s.add_argument("--quad-n", dest="quad_n", type=int, help="quadrature nodes per unit time")
            s.add_argument("--dcut", type=float, help="proximity cut (cm)")
        if name == "trace":
            s.add_argument("--x0", help="start point x,y,z (cm)")
            s.add_argument("--csv", help="polyline CSV output")
            s.add_argument("--reverse", action="store_true", help="also report reverse drift")
        if name in ("link", "lambda"):
            s.add_argument("--x1", help="first start point x,y,z")
            s.add_argument("--x2", help="second start point x,y,z")
        if name == "link":
            s.add_argument("--curves", help="closed-curve preset: hopf | unlinked")
        if name == "lambda":
            s.add_argument("--schedule", help="T schedule for one pair, e.g. 50,100,200,400")
            s.add_argument("--csv", help="distribution CSV output")
        if name in ("lambda", "helicity", "quad", "report"):
            s.add_argument("--pairs", type=int, help="number of start pairs")
        if name == "helicity":
            s.add_argument("--mode", choices=["spectral", "pairs", "energy"])
        if name in ("bound", "local-formula", "report"):
            s.add_argument("--samples", type=int, help="Monte-Carlo point pairs")
        if name == "local-formula":
            s.add_argument("--smax", type=int, help="highest derivative order s")
            s.add_argument("--a", help="comma-separated a values")
            s.add_argument("--h", type=float, help="flow step in magnetic time")
            s.add_argument("--csv", help="partial-sum table CSV")
        if name == "spectrum":
            s.add_argument("--alpha", type=float, help="spectral exponent")
            s.add_argument("--shells", help="shell index range lo..hi (units of 2pi/L)")
            s.add_argument("--box", type=float, help="periodic box side (cm)")
            s.add_argument("--pol", help="random | balanced | right | left")
            s.add_argument("--modes", type=int, help="modes per shell")
            s.add_argument("--fit", choices=list(spec.QUANTITIES), help="fit a log-log slope")
            s.add_argument("--quantity", choices=list(spec.QUANTITIES), help="tabulated quantity")
            s.add_argument("--csv", help="ShellSpectrum CSV output (k,value)")
            s.add_argument("--ensemble-out", help="mode-table JSON output")
        if name == "graph-check":
            s.add_argument("--builtin", action="store_true", help="the eight cubic diagrams")
            s.add_argument("--edges", help="edge-list file ('a b' per line), '-' for stdin")
            s.add_argument("--csv", help="builtin table as CSV")
    return p


def _error(exc, code):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(rec) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    fn, defaults, _ = COMMANDS[args.command]
    try:
        cfg = _resolve(args, {**_COMMON, **defaults})
        _check_positive(cfg, "T_magnetic", "tol", "box_cm", "dcut_cm")
        result = fn(args, cfg)
        _emit(args, cfg, result)
    except UnsupportedRepresentation as exc:
        return _error(exc, EXIT_UNSUPPORTED)
    except (ConfigError, DomainError) as exc:
        return _error(exc, EXIT_CONFIG)
    except (NumericalFailure, SingularityError) as exc:
        return _error(exc, EXIT_NUMERIC)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
