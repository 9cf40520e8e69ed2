"""
Command-line front end.

    sparse-adapt run [--config FILE] [flags]
    sparse-adapt reproduce [--out-dir DIR] [flags]
    sparse-adapt validate

Configuration files are INI files with an ``[experiment]`` section, an
optional ``[output]`` section and one optional ``[algo LABEL]`` section per
algorithm. Precedence: built-in defaults < config file < ``SPARSE_ADAPT_SEED``
(seed only, when no seed was given otherwise) < command-line flags.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as dt
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ParameterError
from .filters import Penalty, parse_label
from .harness import (
    PAPER_ALGORITHMS,
    ExperimentConfig,
    paper_algorithm,
    run_experiment,
)
from .report import render_svg, write_csv

log = logging.getLogger("sparse_adapt")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3

# accepted keys and their types, per config section
EXPERIMENT_KEYS = {
    "n": int, "nt": int, "t": int, "snr": float, "trials": int, "iters": int,
    "seed": int, "e0": float, "algos": str, "log_base": str,
    "mu_s": float, "mu_f": float, "p": float, "eps_lp": float, "beta": float,
    "paper_sign_l0": bool,
}
OUTPUT_KEYS = {"csv": str, "svg": str, "db": bool, "workers": int, "title": str}
ALGO_KEYS = {"mu_s": float, "mu_f": float, "lambda": float, "p": float,
             "eps_lp": float, "beta": float, "paper_sign_l0": bool}

DEFAULTS = {
    "n": 16, "nt": 2, "t": 3, "snr": 3.0, "trials": 200, "iters": 2000, "seed": 1,
    "e0": 1.0, "algos": ",".join(PAPER_ALGORITHMS), "log_base": "e",
    "mu_s": 0.5, "mu_f": 1.5, "p": 0.5, "eps_lp": 0.05, "beta": 5.0,
    "paper_sign_l0": False,
}
OUTPUT_DEFAULTS = {"csv": None, "svg": None, "db": True, "workers": 1, "title": None}

# figure name, dominant taps, SNR in dB
PRESETS = [("fig4", 1, 3.0), ("fig5", 3, 3.0), ("fig6", 3, 6.0), ("fig7", 3, 9.0)]


@dataclass
class RunSettings:
    """Everything a run needs: the experiment plus output options."""

    config: ExperimentConfig
    output: dict
    values: dict
    algo_overrides: dict = field(default_factory=dict)


def _coerce(kind, raw, name):
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ParameterError(name, f"expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ParameterError(name, f"expected {kind.__name__}, got {raw!r}") from None


def _read_ini_text(path):
    path = Path(path)
    if not path.exists():
        raise ParameterError("config", f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            return json.loads(text)["config_ini"]
        except (ValueError, KeyError):
            raise ParameterError("config", f"{path} is not a run manifest") from None
    return text


def read_config_file(path):
    """Parse an INI config into (experiment values, output values, per-algo overrides)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(_read_ini_text(path))
    except configparser.Error as exc:
        raise ParameterError("config", str(exc)) from None
    values, output, algos = {}, {}, {}
    for section in cp.sections():
        if section == "experiment":
            allowed, dest = EXPERIMENT_KEYS, values
        elif section == "output":
            allowed, dest = OUTPUT_KEYS, output
        elif section.startswith("algo "):
            label = parse_label(section[5:]).label
            allowed, dest = ALGO_KEYS, algos.setdefault(label, {})
        else:
            raise ParameterError("config", f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in allowed:
                raise ParameterError(f"{section}.{key}", "unknown key")
            dest[key] = _coerce(allowed[key], raw, f"{section}.{key}")
    return values, output, algos


def _check_algo_overrides(label, overrides):
    spec = parse_label(label)
    fourth = spec.base_family.fourth_order
    irrelevant = {
        "mu_s": fourth,
        "mu_f": not fourth,
        "p": spec.penalty is not Penalty.LP,
        "eps_lp": spec.penalty is not Penalty.LP,
        "beta": spec.penalty is not Penalty.L0,
        "paper_sign_l0": spec.penalty is not Penalty.L0,
        "lambda": spec.penalty is Penalty.NONE and overrides.get("lambda", 0) != 0,
    }
    for key in overrides:
        if irrelevant.get(key):
            raise ParameterError(f"algo {label}.{key}", f"does not apply to {label}")


def _validate_values(v):
    if not v["mu_s"] > 0:
        raise ParameterError("mu_s", f"must be > 0, got {v['mu_s']}")
    if not 0 < v["mu_f"] < 2:
        raise ParameterError("mu_f", f"must lie in (0, 2), got {v['mu_f']}")


def _resolve_algorithms(v, overrides, base):
    labels = [s.strip() for s in v["algos"].split(",") if s.strip()]
    if not labels:
        raise ParameterError("algos", "empty algorithm list")
    canonical = [parse_label(lbl).label for lbl in labels]
    for lbl in overrides:
        if lbl not in canonical:
            raise ParameterError(f"algo {lbl}", "section for an algorithm not in algos")
    specs = []
    for lbl in canonical:
        ov = overrides.get(lbl, {})
        _check_algo_overrides(lbl, ov)
        params = {k: v[k] for k in ("mu_s", "mu_f", "p", "eps_lp", "beta", "paper_sign_l0")}
        params.update({k: val for k, val in ov.items() if k != "lambda"})
        if "lambda" in ov:
            params["lambda_reg"] = ov["lambda"]
        specs.append(paper_algorithm(lbl, base, v["log_base"], **params))
    return tuple(specs)


def resolve(values=None, output=None, overrides=None, env=None):
    """Merge layers of settings into a validated :class:`RunSettings`."""
    env = os.environ if env is None else env
    v = dict(DEFAULTS)
    v.update(values or {})
    if "seed" not in (values or {}) and env.get("SPARSE_ADAPT_SEED"):
        v["seed"] = _coerce(int, env["SPARSE_ADAPT_SEED"], "SPARSE_ADAPT_SEED")
    out = dict(OUTPUT_DEFAULTS)
    out.update(output or {})
    if out["workers"] < 1:
        raise ParameterError("workers", "must be >= 1")
    _validate_values(v)
    base = ExperimentConfig(n=v["n"], n_t=v["nt"], t_dominant=v["t"], snr_db=v["snr"],
                            trials=v["trials"], iterations=v["iters"],
                            master_seed=v["seed"], e0=v["e0"])
    algos = _resolve_algorithms(v, overrides or {}, base)
    config = ExperimentConfig(**{**base.__dict__, "algorithms": algos})
    return RunSettings(config, out, v, overrides or {})


def parse_config(path=None, flags=None, env=None):
    """
    Build RunSettings from an optional config file and flag overrides.

    ``flags`` maps experiment/output keys to values; ``None`` entries are
    ignored.
    """
    values, output, overrides = ({}, {}, {}) if path is None else read_config_file(path)
    for key, val in (flags or {}).items():
        if val is None:
            continue
        if key in EXPERIMENT_KEYS:
            values[key] = val
        elif key in OUTPUT_KEYS:
            output[key] = val
        else:
            raise ParameterError(key, "unknown option")
    return resolve(values, output, overrides, env)


def config_echo(settings):
    """Fully resolved configuration as INI text; reloading it reproduces the run."""
    c = settings.config
    v = settings.values
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = {
        "n": str(c.n), "nt": str(c.n_t), "t": str(c.t_dominant), "snr": repr(c.snr_db),
        "trials": str(c.trials), "iters": str(c.iterations), "seed": str(c.master_seed),
        "e0": repr(c.e0), "algos": ",".join(a.label for a in c.algorithms),
        "log_base": str(v["log_base"]),
    }
    shared = cp["experiment"]
    for key in ("mu_s", "mu_f", "p", "eps_lp", "beta"):
        shared[key] = repr(float(v[key]))
    shared["paper_sign_l0"] = str(bool(v["paper_sign_l0"])).lower()
    for a in c.algorithms:
        sec = {"lambda": repr(a.lambda_reg)}
        if a.base_family.fourth_order:
            sec["mu_f"] = repr(a.mu_f)
        else:
            sec["mu_s"] = repr(a.mu_s)
        if a.penalty is Penalty.LP:
            sec.update(p=repr(a.p), eps_lp=repr(a.eps_lp))
        elif a.penalty is Penalty.L0:
            sec.update(beta=repr(a.beta), paper_sign_l0=str(a.paper_sign_l0).lower())
        elif a.lambda_reg == 0:
            del sec["lambda"]
        cp[f"algo {a.label}"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_as_dict(config):
    return {
        "n": config.n, "n_t": config.n_t, "t_dominant": config.t_dominant,
        "snr_db": config.snr_db, "sigma_n2": config.sigma_n2, "trials": config.trials,
        "iterations": config.iterations, "master_seed": config.master_seed, "e0": config.e0,
        "algorithms": [
            {"label": a.label, "base_family": a.base_family.value, "penalty": a.penalty.value,
             "mu_s": a.mu_s, "mu_f": a.mu_f, "lambda_reg": a.lambda_reg, "rho": a.rho,
             "p": a.p, "eps_lp": a.eps_lp, "beta": a.beta, "paper_sign_l0": a.paper_sign_l0}
            for a in config.algorithms
        ],
    }


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def execute(settings, csv_path=None, svg_path=None):
    """Run one experiment, write the requested outputs and a manifest.

    Returns the trajectories and the list of files written.
    """
    started = _now()
    out = settings.output
    csv_path = csv_path or out["csv"]
    svg_path = svg_path or out["svg"]
    c = settings.config
    log.info("running %d trials x %d iterations: %s", c.trials, c.iterations,
             ", ".join(a.label for a in c.algorithms))
    trajectories = run_experiment(c, workers=out["workers"])
    files = []
    if csv_path:
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        write_csv(trajectories, csv_path)
        files.append(str(csv_path))
    if svg_path:
        Path(svg_path).parent.mkdir(parents=True, exist_ok=True)
        title = out["title"] or (f"Average MSE, N={c.n}, Nt={c.n_t}, T={c.t_dominant}, "
                                 f"SNR={c.snr_db:g} dB")
        render_svg(trajectories, svg_path, db_scale=out["db"], title=title)
        files.append(str(svg_path))
    if csv_path:
        manifest = {
            "tool_version": __version__,
            "started_at": started,
            "finished_at": _now(),
            "snr_definition": "20*log10(E0/sigma_n^2)",
            "output_files": files,
            "config_echo": config_as_dict(c),
            "config_ini": config_echo(settings),
        }
        mpath = Path(str(csv_path) + ".manifest.json")
        mpath.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        files.append(str(mpath))
    for t in trajectories:
        if t.all_diverged:
            log.warning("%s: all %d trials diverged", t.algorithm_label, t.trials)
        elif t.diverged_trials:
            log.warning("%s: %d of %d trials diverged", t.algorithm_label,
                        t.diverged_trials, t.trials)
    return trajectories, files


def _summary(trajectories, echo):
    from .harness import terminal_mse_db

    for t in trajectories:
        if t.all_diverged:
            echo(f"{t.algorithm_label:>10s}  diverged in all {t.trials} trials")
        else:
            echo(f"{t.algorithm_label:>10s}  terminal MSE {terminal_mse_db(t.per_iteration_mse):8.3f} dB"
                 f"  (diverged {t.diverged_trials}/{t.trials})")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config or run manifest")
    common.add_argument("--snr", type=float, help="SNR in dB, 20*log10(E0/sigma_n^2)")
    common.add_argument("--n", type=int, help="taps per antenna channel")
    common.add_argument("--nt", type=int, help="transmit antennas")
    common.add_argument("--t", type=int, help="dominant taps per antenna")
    common.add_argument("--trials", type=int)
    common.add_argument("--iters", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--algos", help="comma-separated labels, e.g. NLMS,L0-NLMS")
    common.add_argument("--mu-s", dest="mu_s", type=float)
    common.add_argument("--mu-f", dest="mu_f", type=float)
    common.add_argument("--p", type=float, help="Lp penalty exponent")
    common.add_argument("--eps-lp", dest="eps_lp", type=float)
    common.add_argument("--beta", type=float, help="L0 surrogate sharpness")
    common.add_argument("--log-base", dest="log_base", choices=["e", "10", "2"])
    common.add_argument("--paper-sign-l0", dest="paper_sign_l0", action="store_const",
                        const=True, help="use the literal (repelling) L0 sign")
    common.add_argument("--workers", type=int)
    scale = common.add_mutually_exclusive_group()
    scale.add_argument("--db", dest="db", action="store_const", const=True)
    scale.add_argument("--linear", dest="db", action="store_const", const=False)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sparse-adapt", description=__doc__.split("\n")[1])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run one experiment")
    run.add_argument("--out-csv", dest="csv")
    run.add_argument("--out-svg", dest="svg")
    rep = sub.add_parser("reproduce", parents=[common],
                         help="run the four preset experiments (T, SNR) = (1,3) (3,3) (3,6) (3,9)")
    rep.add_argument("--out-dir", default="results")
    sub.add_parser("validate", help="run the built-in invariant checks")
    return parser


_FLAG_KEYS = ("snr", "n", "nt", "t", "trials", "iters", "seed", "algos", "mu_s", "mu_f",
              "p", "eps_lp", "beta", "log_base", "paper_sign_l0", "workers", "db")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "validate":
        from .checks import run_all

        return EXIT_OK if run_all() else EXIT_INVALID

    flags = {k: getattr(args, k) for k in _FLAG_KEYS}
    try:
        if args.command == "run":
            flags.update(csv=args.csv, svg=args.svg)
            settings = parse_config(args.config, flags)
            runs = [(settings, None, None)]
        else:
            runs = []
            out_dir = Path(args.out_dir)
            for name, t, snr in PRESETS:
                preset = dict(flags, t=t, snr=snr)
                settings = parse_config(args.config, preset)
                runs.append((settings, out_dir / f"{name}_T{t}_snr{snr:g}.csv",
                             out_dir / f"{name}_T{t}_snr{snr:g}.svg"))
    except ParameterError as exc:
        print(f"sparse-adapt: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    status = EXIT_OK
    for settings, csv_path, svg_path in runs:
        c = settings.config
        print(f"N={c.n} Nt={c.n_t} T={c.t_dominant} SNR={c.snr_db:g} dB "
              f"(sigma_n^2={c.sigma_n2:.6g}) trials={c.trials} iters={c.iterations}")
        trajectories, files = execute(settings, csv_path, svg_path)
        _summary(trajectories, print)
        for f in files:
            print(f"wrote {f}")
        if any(t.all_diverged for t in trajectories):
            status = EXIT_DIVERGED
    return status


if __name__ == "__main__":
    sys.exit(main())
