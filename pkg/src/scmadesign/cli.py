"""Command-line front end.

Every command reads an optional INI config (section named after the
command), applies ``--seed``/``--threads`` and a few convenience flags, and
writes ``manifest.ini`` to the output directory with the fully resolved
settings.  Passing that manifest back via ``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import codebook as cbmod
from .codebook import design_codebooks, fit_design_point, load_codebooks, reference_codebooks
from .constellation import dimension_energy
from .errors import InfeasibleError, ScmaError, ConfigError
from .link import EBN0_DEFINITION, MpaConfig, StopRule, ber_sweep
from .metrics import (gamma_mpd_closed_form, med_exact, med_monte_carlo, metrics_report,
                      system_mpd)
from .optimizer import GaConfig, ga_optimize
from .signature import builtin_template, girth, indicator_matrix

log = logging.getLogger("scmadesign")


def _floats(text):
    """Parse ``"a,b,c"`` or a ``"start:stop:step"`` range (stop inclusive)."""
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default); None default means "unset"
SCHEMAS = {
    "info": {"template": (str, "S4x6"), "M": (int, 4), "omega": (float, None)},
    "build": {
        "reference": (str, None), "template": (str, "S4x6"), "M": (int, 4),
        "energies": (_floats, None), "phases": (_floats, None), "omega": (float, None),
    },
    "metrics": {
        "codebook": (str, None), "reference": (str, None), "med_method": (str, "exact"),
        "Q": (int, 5000), "t_max": (int, 20), "aggregate": (str, "min"), "seed": (int, None),
    },
    "optimize": {
        "template": (str, "S4x6"), "M": (int, 4), "kappa": (float, 0.54),
        "population_size": (int, 50), "generations": (int, 50), "med_method": (str, "auto"),
        "Q": (int, 5000), "t_max": (int, 20), "crossover_rate": (float, 0.9),
        "mutation_rate": (float, 0.1), "mutation_scale": (float, 0.05),
        "elitism_count": (int, 2), "tournament_size": (int, 2), "omega_max": (float, 10.0),
        "seed": (int, None),
    },
    "simulate": {
        "codebook": (str, None), "reference": (str, None), "channel": (str, "awgn"),
        "decoder": (str, "mpa"), "ebn0_db": (_floats, "0:12:2"), "min_errors": (int, 200),
        "max_bits": (int, 10**8), "per_user_stop": (_bool, False), "iterations": (int, 8),
        "damping": (float, 0.0), "domain": (str, "log"), "labeling": (str, "gray"),
        "batch_size": (int, 2000), "seed": (int, None),
    },
}


def _format(value):
    if isinstance(value, (list, tuple)):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve_config(command, path=None, overrides=None):
    """Merge schema defaults, the config file and command-line overrides."""
    schema = SCHEMAS[command]
    raw = {}
    if path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        if parser.has_section(command):
            raw.update(parser[command])
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys for [{command}]: {', '.join(sorted(unknown))}")
    cfg = {}
    for key, (parse, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = raw[key] if not isinstance(raw[key], str) else parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"[{command}] {key}: {exc}") from None
        elif isinstance(default, str) and parse is not str:
            cfg[key] = parse(default)
        else:
            cfg[key] = default
    if "seed" in schema and cfg["seed"] is None:
        cfg["seed"] = secrets.randbelow(2**31)
    return cfg


def write_manifest(out_dir, command, cfg, extra=None):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser[command] = {k: _format(v) for k, v in cfg.items() if v is not None}
    if extra:
        parser["run"] = {k: str(v) for k, v in extra.items()}
    with open(Path(out_dir) / "manifest.ini", "w") as fh:
        parser.write(fh)


def _load_set(cfg):
    if cfg.get("codebook") and cfg.get("reference"):
        raise ConfigError("give either 'codebook' or 'reference', not both")
    if cfg.get("codebook"):
        return load_codebooks(cfg["codebook"])
    if cfg.get("reference"):
        return reference_codebooks(cfg["reference"])
    raise ConfigError("one of 'codebook' or 'reference' is required")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_info(cfg, out_dir, threads):
    t = builtin_template(cfg["template"])
    ind = indicator_matrix(t)
    g = girth(ind)
    print(f"template {t.name}: K={t.K} J={t.J} d_f={t.d_f} N=2")
    print(f"overload factor lambda = J/K = {100 * t.overload:.0f}%")
    print("indicator matrix:")
    for row in ind:
        print("  " + " ".join(str(v) for v in row))
    print(f"girth = {g if g is not None else 'no cycle'}")
    if cfg["omega"] is not None:
        print(f"dimension energy E(M={cfg['M']}, omega={cfg['omega']}) = "
              f"{dimension_energy(cfg['M'], cfg['omega']):.6g}")
    return 0


def cmd_build(cfg, out_dir, threads):
    if cfg["reference"]:
        cs = reference_codebooks(cfg["reference"])
    else:
        missing = [k for k in ("energies", "phases", "omega") if cfg[k] is None]
        if missing:
            raise ConfigError(f"build needs {', '.join(missing)} (or a reference id)")
        cs = design_codebooks(cfg["template"], cfg["energies"], cfg["phases"], cfg["omega"],
                              cfg["M"])
    path = Path(out_dir) / "codebook.json"
    cbmod.save_codebooks(cs, path)
    write_manifest(out_dir, "build", cfg)
    print(f"wrote {path}")
    return 0


def _closed_form(cs):
    if cs.template is None:
        return None
    if cs.design_point:
        dp = cs.design_point
        return gamma_mpd_closed_form(cs.template, dp["E"], cs.M, dp["omega"])
    E, _, omega = fit_design_point(cs, cs.template)
    return gamma_mpd_closed_form(cs.template, E, cs.M, omega)


def cmd_metrics(cfg, out_dir, threads):
    cs = _load_set(cfg)
    if cfg["med_method"] == "exact":
        med = med_exact(cs)
    elif cfg["med_method"] == "monte_carlo":
        med = med_monte_carlo(cs, cfg["Q"], cfg["t_max"], cfg["seed"], cfg["aggregate"], threads)
    else:
        raise ConfigError(f"unknown med_method {cfg['med_method']!r}")
    mpd = system_mpd(cs, _closed_form(cs))
    doc = metrics_report(med, mpd)
    _write_json(Path(out_dir) / "metrics.json", doc)
    write_manifest(out_dir, "metrics", cfg)
    print(f"MED = {med.value:.4f} ({med.method})")
    print(f"MPD = {mpd.system:.4f} (per user: {', '.join(f'{v:.4f}' for v in mpd.per_user)})")
    return 0


def cmd_optimize(cfg, out_dir, threads):
    ga_keys = set(GaConfig.__dataclass_fields__) - {"workers"}
    ga = GaConfig(**{k: v for k, v in cfg.items() if k in ga_keys}, workers=threads)
    result = ga_optimize(cfg["M"], cfg["template"], ga)
    out = Path(out_dir)
    doc = result.to_dict()
    doc["config"].pop("workers", None)
    doc["template"] = cfg["template"]
    doc["M"] = cfg["M"]
    _write_json(out / "result.json", doc)
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "best_med"])
        for g, h in enumerate(result.history, 1):
            w.writerow([g, "" if h != h else repr(h)])
    write_manifest(out_dir, "optimize", cfg)
    if not result.feasible:
        raise InfeasibleError(f"no design reached MPD >= kappa={cfg['kappa']}; best MPD "
                              f"achieved {result.best_mpd:.4f} (see {out / 'result.json'})")
    b = result.best
    cs = design_codebooks(cfg["template"], b.energies, b.phases, b.omega, cfg["M"])
    cbmod.save_codebooks(cs, out / "codebook.json")
    print(f"best MED = {result.best_med:.4f}, MPD = {result.best_mpd:.4f}")
    print(f"E = {', '.join(f'{e:.3f}' for e in b.energies)}; omega = {b.omega:.4f}")
    return 0


def cmd_simulate(cfg, out_dir, threads):
    cs = _load_set(cfg)
    curve = ber_sweep(
        cs, cfg["channel"], cfg["decoder"], cfg["ebn0_db"],
        StopRule(cfg["min_errors"], cfg["max_bits"], cfg["per_user_stop"]), cfg["seed"],
        MpaConfig(cfg["iterations"], cfg["damping"], cfg["domain"]), cfg["labeling"],
        cfg["batch_size"], threads)
    out = Path(out_dir)
    (out / "ber.csv").write_text(curve.to_csv())
    _write_json(out / "ber.json", curve.sidecar())
    write_manifest(out_dir, "simulate", cfg, {"ebn0_definition": EBN0_DEFINITION})
    print(curve.to_csv(), end="")
    return 0


COMMANDS = {
    "info": cmd_info,
    "build": cmd_build,
    "metrics": cmd_metrics,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="scmadesign",
                                description="Power-imbalanced SCMA codebook design and evaluation")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI file with a section named after the command")
    p.add_argument("--out-dir", default=".", help="directory for output artefacts")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--template", help="template name (info, build, optimize)")
    p.add_argument("--reference", help="reference codebook id (build, metrics, simulate)")
    p.add_argument("--codebook", help="codebook JSON file (metrics, simulate)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    schema = SCHEMAS[args.command]
    overrides = {k: getattr(args, k) for k in ("seed", "template", "reference", "codebook")
                 if k in schema}
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve_config(args.command, args.config, overrides)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out_dir, args.threads)
    except ScmaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
