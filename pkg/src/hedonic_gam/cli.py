"""Command-line interface.

Commands
--------
synth    write a synthetic sale-record CSV
fit      fit GAM and/or GLM, write model files, significance table and partial effects
analyze  leave-one-factor-out change in adjusted R^2
corr     correlation table and redundancy findings
report   fit + analyze + corr in one pass (reduced fits are shared)

Settings come from built-in defaults, then an optional ``--config`` file
of ``key = value`` lines, then command-line flags. Exit codes: 0 success,
2 invalid configuration or usage, 3 input data problem, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .analysis import FactorContribution, correlation_matrix, delta_r2_analysis, redundancy_report
from .data_model import DEFAULT_ROSTER
from .errors import ConfigError, DataError, HedonicError
from .gam import GamConfig, fit_gam
from .glm import fit_glm
from .inference import gam_term_significance, glm_term_significance, reduced_fits
from .ingest import FilterConfig, ingest, write_records_csv
from .report import (
    Table,
    contribution_table,
    correlation_pairs_table,
    correlation_table,
    partial_effects_table,
    redundancy_table,
    significance_table,
)
from .serialize import save_model
from .synthetic import city_scenario, generate, to_records

log = logging.getLogger("hedonic_gam")

COMMANDS = ("synth", "fit", "analyze", "corr", "report")
FORMATS = ("md", "csv", "json")
FAMILIES = ("gam", "glm", "both")
DELTA_FILE = "contributions.json"

# config-file key -> (type, description); also the flag names with "_" -> "-"
CONFIG_KEYS = {
    "input": (str, "input CSV path"),
    "out": (str, "output directory"),
    "family": (str, "gam | glm | both"),
    "edf": (float, "target effective df per smooth"),
    "segments": (int, "B-spline segments per smooth"),
    "lambda_mode": (str, "edf | gcv"),
    "max_sweeps": (int, "backfitting sweep limit"),
    "tol": (float, "backfitting relative RSS tolerance"),
    "seed": (int, "synthetic seed"),
    "n": (int, "synthetic observation count"),
    "city": (str, "synthetic correlation preset: DEN | JAX | PHX"),
    "noise_sd": (float, "synthetic noise sd on log10 price"),
    "format": (str, "comma list of md, csv, json"),
    "factors": (str, "comma list of factor names (default: full roster)"),
    "workers": (int, "threads for reduced refits"),
    "min_price": (float, "filter: minimum price"),
    "max_price": (float, "filter: maximum price"),
    "min_sqft": (float, "filter: minimum square footage"),
    "min_lot": (float, "filter: minimum lot size"),
    "min_beds": (float, "filter: minimum bedrooms"),
    "min_baths": (float, "filter: minimum bathrooms"),
    "window_months": (str, "filter: sale window in months, or 'none'"),
    "reference_date": (str, "filter: window end date (YYYY-MM-DD)"),
    "no_filters": (bool, "disable all record filters"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    out: Path
    input: Path | None = None
    family: str = "both"
    gam: GamConfig = field(default_factory=GamConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    seed: int = 0
    n: int = 5000
    city: str = "PHX"
    noise_sd: float = 0.1
    formats: tuple[str, ...] = FORMATS
    factors: tuple[str, ...] | None = None
    workers: int | None = None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key, value):
    typ = CONFIG_KEYS[key][0]
    if typ is bool:
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {value!r} as {typ.__name__}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file (flags override it)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", help="comma list of md, csv, json (default: all)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="sale-record CSV")
    data.add_argument("--factors", help="comma list of roster factors to use")
    data.add_argument("--edf", type=float, help="target effective df per smooth")
    data.add_argument("--segments", type=int, help="B-spline segments per smooth")
    data.add_argument("--lambda-mode", choices=("edf", "gcv"))
    data.add_argument("--max-sweeps", type=int)
    data.add_argument("--tol", type=float, help="backfitting tolerance")
    data.add_argument("--workers", type=int, help="threads for reduced refits")
    data.add_argument("--min-price", type=float)
    data.add_argument("--max-price", type=float)
    data.add_argument("--min-sqft", type=float)
    data.add_argument("--min-lot", type=float)
    data.add_argument("--min-beds", type=float)
    data.add_argument("--min-baths", type=float)
    data.add_argument("--window-months", help="sale window in months, or 'none'")
    data.add_argument("--reference-date", help="end of the sale window (YYYY-MM-DD)")
    data.add_argument("--no-filters", action="store_const", const=True, default=None)

    p = argparse.ArgumentParser(prog="hedonic-gam", description="Additive hedonic price models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("synth", parents=[common], help="write a synthetic sale-record CSV")
    s.add_argument("--n", type=int)
    s.add_argument("--city", choices=("DEN", "JAX", "PHX"))
    s.add_argument("--noise-sd", type=float)
    for name, helptext in (
        ("fit", "fit models and write the significance table"),
        ("analyze", "change in adjusted R² per removed factor"),
        ("corr", "correlation table and redundancy findings"),
        ("report", "fit, analyze and corr together"),
    ):
        c = sub.add_parser(name, parents=[common, data], help=helptext)
        if name in ("fit", "report"):
            c.add_argument("--family", choices=FAMILIES)
    return p


def _merge(args: argparse.Namespace) -> dict:
    settings = {}
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    return settings


def _window(value):
    if value is None:
        return None, False
    if str(value).strip().lower() in ("none", "off", ""):
        return None, True
    try:
        months = int(value)
    except ValueError:
        raise ConfigError(f"window_months: expected an integer or 'none', got {value!r}") from None
    return months, True


def resolve(command: str, settings: dict) -> RunConfig:
    """Validate merged settings into a RunConfig (no computation happens here)."""
    out = settings.get("out")
    if not out:
        raise ConfigError("--out is required")
    out = Path(out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"output path {out} exists and is not a directory")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")

    fmt = settings.get("format")
    formats = FORMATS if fmt is None else tuple(f.strip() for f in str(fmt).split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"format must be a comma list drawn from {FORMATS}, got {fmt!r}")

    family = settings.get("family", "both")
    if family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}, got {family!r}")

    inp = settings.get("input")
    if command != "synth":
        if not inp:
            raise ConfigError("--input is required")
        inp = Path(inp)

    factors = None
    if "factors" in settings:
        factors = tuple(s.strip() for s in str(settings["factors"]).split(",") if s.strip())
        if not factors:
            raise ConfigError("factor roster is empty")
        known = [f.name for f in DEFAULT_ROSTER]
        unknown = [f for f in factors if f not in known]
        if unknown:
            raise ConfigError(f"unknown factors {unknown}; choose from {known}")
        if len(set(factors)) != len(factors):
            raise ConfigError("factor list has duplicates")

    gam_kw = {}
    for key, attr in (("edf", "target_edf_per_smooth"), ("segments", "n_segments"),
                      ("lambda_mode", "lambda_mode"), ("max_sweeps", "max_sweeps"),
                      ("tol", "backfit_tol")):
        if key in settings:
            gam_kw[attr] = settings[key]
    gam = GamConfig(**gam_kw)

    filters = FilterConfig.identity() if settings.get("no_filters") else FilterConfig()
    months, given = _window(settings.get("window_months"))
    ref = settings.get("reference_date")
    if ref is not None:
        try:
            ref = dt.date.fromisoformat(str(ref))
        except ValueError:
            raise ConfigError(f"reference_date: expected YYYY-MM-DD, got {ref!r}") from None
    filters = filters.updated(
        price_min=settings.get("min_price"), price_max=settings.get("max_price"),
        sqft_min=settings.get("min_sqft"), lot_min=settings.get("min_lot"),
        beds_min=settings.get("min_beds"), baths_min=settings.get("min_baths"),
        reference_date=ref,
    )
    if given:
        filters = replace(filters, window_months=months)

    n = settings.get("n", 5000)
    if n < 20:
        raise ConfigError("n must be at least 20")
    noise_sd = settings.get("noise_sd", 0.1)
    if not noise_sd >= 0:
        raise ConfigError("noise_sd must be >= 0")
    city = str(settings.get("city", "PHX")).upper()
    if city not in ("DEN", "JAX", "PHX"):
        raise ConfigError(f"city must be DEN, JAX or PHX, got {city!r}")
    workers = settings.get("workers")
    if workers is not None and workers < 1:
        raise ConfigError("workers must be >= 1")
    return RunConfig(
        command=command, out=out, input=inp, family=family, gam=gam, filters=filters,
        seed=settings.get("seed", 0), n=n, city=city, noise_sd=noise_sd,
        formats=formats, factors=factors, workers=workers,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="")
    log.info("wrote %s", path)


def _emit(cfg: RunConfig, table: Table, stdout=True):
    for fmt in cfg.formats:
        _write(cfg.out / f"{table.name}.{fmt}", table.render(fmt))
    if stdout:
        sys.stdout.write(table.to_markdown() + "\n")


def _load(cfg: RunConfig):
    roster = DEFAULT_ROSTER
    if cfg.factors is not None:
        by_name = {f.name: f for f in DEFAULT_ROSTER}
        roster = tuple(by_name[nm] for nm in cfg.factors)
    if not cfg.input.is_file():
        raise DataError(f"input file {cfg.input} not found")
    ds, summary = ingest(cfg.input, cfg.filters, roster)
    _write(cfg.out / "ingest_summary.json", json.dumps(summary, indent=2, default=str) + "\n")
    log.info("%d observations after filtering", ds.n)
    return ds


def cmd_synth(cfg: RunConfig) -> int:
    spec = city_scenario(cfg.city, n=cfg.n, seed=cfg.seed, noise_sd=cfg.noise_sd)
    ds, _ = generate(spec)
    path = cfg.out / "synthetic.csv"
    write_records_csv(to_records(ds, seed=cfg.seed), path)
    sys.stdout.write(f"wrote {ds.n} records to {path}\n")
    return 0


def _fit(cfg: RunConfig, ds, reduced=None):
    tests, adj = {}, {}
    gam = None
    if cfg.family in ("glm", "both"):
        glm = fit_glm(ds)
        save_model(glm, cfg.out / "glm_model.json")
        tests["GLM"], adj["GLM"] = glm_term_significance(glm), glm.adj_r2
    if cfg.family in ("gam", "both"):
        gam = fit_gam(ds, cfg.gam)
        save_model(gam, cfg.out / "gam_model.json")
        if reduced is None:
            reduced = reduced_fits(ds, cfg.gam, cfg.workers)
        tests["GAM"] = gam_term_significance(ds, cfg.gam, full_model=gam, reduced=reduced)
        adj["GAM"] = gam.adj_r2
        _write(cfg.out / "partial_effects.csv", partial_effects_table(gam).to_csv())
    _emit(cfg, significance_table(ds.names, tests, adj))
    return gam, reduced


def _analyze(cfg: RunConfig, ds, baseline=None, reduced=None):
    contrib = delta_r2_analysis(ds, cfg.gam, baseline=baseline, reduced=reduced, workers=cfg.workers)
    _write(cfg.out / DELTA_FILE, json.dumps(
        [{"factor": c.factor, "delta_r2": c.delta_r2, "baseline_adj_r2": c.baseline_adj_r2,
          "dropped_adj_r2": c.dropped_adj_r2, "esg": c.esg, "reliable": c.reliable}
         for c in contrib], indent=2) + "\n")
    _emit(cfg, contribution_table(contrib))
    return contrib


def _saved_contributions(cfg: RunConfig, names):
    path = cfg.out / DELTA_FILE
    if not path.is_file():
        return None
    try:
        rows = json.loads(path.read_text(encoding="utf-8"))
        order = [r["factor"] for r in rows]
    except (ValueError, KeyError, TypeError):
        log.warning("ignoring unreadable %s", path)
        return None
    if sorted(order) != sorted(names):
        log.warning("%s covers a different roster; using roster order", path)
        return None
    return [FactorContribution(r["factor"], r["baseline_adj_r2"], r["dropped_adj_r2"],
                               r.get("reliable", True), r.get("esg", False)) for r in rows]


def _corr(cfg: RunConfig, ds, contrib=None):
    corr = correlation_matrix(ds)
    if contrib is None:
        contrib = _saved_contributions(cfg, ds.names)
    if contrib is not None:
        corr = corr.reorder([c.factor for c in contrib])
    _emit(cfg, correlation_table(corr))
    _emit(cfg, correlation_pairs_table(corr), stdout=False)
    _emit(cfg, redundancy_table(redundancy_report(contrib, corr)))


def cmd_fit(cfg: RunConfig) -> int:
    _fit(cfg, _load(cfg))
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    _analyze(cfg, _load(cfg))
    return 0


def cmd_corr(cfg: RunConfig) -> int:
    _corr(cfg, _load(cfg))
    return 0


def cmd_report(cfg: RunConfig) -> int:
    ds = _load(cfg)
    gam, reduced = _fit(cfg, ds)
    contrib = _analyze(cfg, ds, baseline=gam, reduced=reduced)
    _corr(cfg, ds, contrib)
    return 0


HANDLERS = {"synth": cmd_synth, "fit": cmd_fit, "analyze": cmd_analyze, "corr": cmd_corr, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, _merge(args))
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return HANDLERS[cfg.command](cfg)
    except HedonicError as e:
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code
    except (OSError, UnicodeDecodeError) as e:
        sys.stderr.write(f"error: cannot read input: {e}\n")
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
