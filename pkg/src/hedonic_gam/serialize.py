"""Versioned JSON documents for fitted GAM and GLM models.

Floats are written with ``repr`` precision (the :mod:`json` default), so
a saved and reloaded model predicts bit-for-bit what the original did.
Per-observation arrays (fitted values, residuals, term contributions)
are not stored; reloaded models carry empty arrays for them.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data_model import FactorSpec, NormalizationStats
from .errors import SchemaError
from .gam import GamConfig, GamModel, TermFit
from .glm import GlmModel
from .smoothing import BSplineBasis, SmoothFit

FORMAT = "hedonic-gam-model"
VERSION = 1

_EMPTY = np.zeros(0)


def _factor_dict(f: FactorSpec):
    return {"name": f.name, "kind": f.kind.value, "category": f.category.value, "column": f.column}


def _term_dict(t: TermFit):
    d = {"factor": t.factor, "kind": t.kind, "edf": t.edf, "offset": t.offset}
    if t.kind == "smooth":
        s = t.smooth
        d.update(
            basis=s.basis.to_dict() | {"knots": s.basis.knots.tolist()},
            coef=s.coef.tolist(),
            lam=s.lam,
            smooth_edf=s.edf,
            penalty_order=s.penalty_order,
            jitter=s.jitter,
        )
    else:
        d["slope"] = t.slope
    return d


def model_to_dict(model) -> dict:
    """JSON-ready document for a GamModel or GlmModel."""
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "factors": [_factor_dict(f) for f in model.factors],
        "normalization": model.norm.to_dict(),
    }
    if isinstance(model, GamModel):
        doc.update(
            kind="gam",
            intercept=model.intercept,
            terms=[_term_dict(t) for t in model.terms],
            config=model.config.to_dict(),
            stats={
                "rss": model.rss, "tss": model.tss, "n": model.n, "total_edf": model.total_edf,
                "r2": model.r2, "adj_r2": model.adj_r2,
                "sweeps_used": model.sweeps_used, "converged": model.converged,
            },
        )
    elif isinstance(model, GlmModel):
        doc.update(
            kind="glm",
            beta=model.beta.tolist(),
            se=model.se.tolist(),
            t_stats=model.t_stats.tolist(),
            p_values=model.p_values.tolist(),
            stats={
                "rss": model.rss, "tss": model.tss, "n": model.n, "df_resid": model.df_resid,
                "r2": model.r2, "adj_r2": model.adj_r2,
            },
        )
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def _term_from(d):
    if d["kind"] == "smooth":
        b = d["basis"]
        basis = BSplineBasis(int(b["degree"]), np.array(b["knots"], dtype=float),
                             float(b["x_min"]), float(b["x_max"]), int(b["n_segments"]))
        smooth = SmoothFit(basis, np.array(d["coef"], dtype=float), d["lam"], d["smooth_edf"],
                           d["penalty_order"], d["jitter"])
        return TermFit(d["factor"], "smooth", _EMPTY, d["edf"], d["offset"], smooth=smooth)
    if d["kind"] == "linear":
        return TermFit(d["factor"], "linear", _EMPTY, d["edf"], d["offset"], slope=d["slope"])
    raise SchemaError(f"unknown term kind {d['kind']!r}")


def model_from_dict(doc: dict):
    """Inverse of :func:`model_to_dict`."""
    if doc.get("format") != FORMAT:
        raise SchemaError("not a model document")
    if doc.get("version") != VERSION:
        raise SchemaError(f"unsupported model document version {doc.get('version')!r}")
    factors = tuple(FactorSpec(**f) for f in doc["factors"])
    norm = NormalizationStats.from_dict(doc["normalization"])
    st = doc["stats"]
    if doc["kind"] == "gam":
        terms = tuple(_term_from(t) for t in doc["terms"])
        if [t.factor for t in terms] != [f.name for f in factors]:
            raise SchemaError("term list does not match the factor roster")
        return GamModel(
            factors=factors, norm=norm, intercept=doc["intercept"], terms=terms,
            fitted=_EMPTY, residuals=_EMPTY,
            rss=st["rss"], tss=st["tss"], n=st["n"], total_edf=st["total_edf"],
            r2=st["r2"], adj_r2=st["adj_r2"], sweeps_used=st["sweeps_used"],
            converged=st["converged"], config=GamConfig(**doc["config"]),
        )
    if doc["kind"] == "glm":
        arr = lambda k: np.array(doc[k], dtype=float)  # noqa: E731
        return GlmModel(
            factors=factors, norm=norm, beta=arr("beta"), se=arr("se"), t_stats=arr("t_stats"),
            p_values=arr("p_values"), fitted=_EMPTY, residuals=_EMPTY,
            rss=st["rss"], tss=st["tss"], r2=st["r2"], adj_r2=st["adj_r2"],
            n=st["n"], df_resid=st["df_resid"],
        )
    raise SchemaError(f"unknown model kind {doc['kind']!r}")


def dumps(model) -> str:
    return json.dumps(model_to_dict(model), indent=2, allow_nan=False) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"model file is not valid JSON: {e}") from None
    try:
        return model_from_dict(doc)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"malformed model document: {e!r}") from None


def save_model(model, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load_model(path):
    return loads(Path(path).read_text(encoding="utf-8"))
