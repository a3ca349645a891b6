"""Table rendering: significance, contribution and correlation tables.

Numbers are formatted once into strings by the table builders; the
Markdown, CSV and JSON renderers only lay those strings out, so all three
formats agree cell for cell and output is byte-stable for equal inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analysis import (
    CorrelationMatrix,
    FactorContribution,
    RedundancyFinding,
    classify_strength,
)
from .inference import STAR_THRESHOLD, TermTest

STARS = "***"
ADJ_R2_LABEL = "Adj. R²"


def _fixed(x: float, places: int) -> str:
    s = f"{x:.{places}f}"
    # "-0.00" carries no information beyond "0.00"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def format_p(p: float) -> str:
    """``"***"`` below 0.001, otherwise three decimals."""
    if math.isnan(p):
        return "NA"
    return STARS if p < STAR_THRESHOLD else _fixed(p, 3)


def format_r2(r2: float) -> str:
    return _fixed(r2, 3)


def format_delta(d: float) -> str:
    """Change in adjusted R^2; ``"***"`` when its magnitude is below 0.001."""
    return STARS if abs(d) < STAR_THRESHOLD else _fixed(d, 3)


def format_corr(r: float) -> str:
    return _fixed(r, 2)


@dataclass(frozen=True)
class Table:
    """A titled grid of preformatted string cells."""

    name: str
    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row {r!r} has {len(r)} cells, expected {len(self.columns)}")

    def to_markdown(self) -> str:
        widths = [max([len(c)] + [len(r[j]) for r in self.rows]) for j, c in enumerate(self.columns)]

        def line(cells):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

        out = [f"### {self.title}", "", line(self.columns),
               "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
        out += [line(r) for r in self.rows]
        if self.notes:
            out.append("")
            out += [f"{n}" for n in self.notes]
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "title": self.title,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "notes": list(self.notes),
        }

    def render(self, fmt: str) -> str:
        if fmt == "md":
            return self.to_markdown()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"
        raise ValueError(f"unknown table format {fmt!r}")


P_NOTE = f"{STARS} p-value < 0.001"


def significance_table(
    names: Sequence[str],
    tests: dict[str, Sequence[TermTest]],
    adj_r2: dict[str, float],
) -> Table:
    """Per-factor p-values for each model family plus an adjusted R^2 row.

    ``tests`` and ``adj_r2`` are keyed by family label (e.g. "GLM", "GAM").
    """
    families = list(tests)
    lookup = {fam: {t.factor: t for t in ts} for fam, ts in tests.items()}
    rows = []
    for nm in names:
        rows.append((nm, *(format_p(lookup[fam][nm].p_value) for fam in families)))
    rows.append((ADJ_R2_LABEL, *(format_r2(adj_r2[fam]) for fam in families)))
    notes = [P_NOTE]
    flaky = sorted({t.factor for ts in tests.values() for t in ts if not t.reliable})
    if flaky:
        notes.append("unreliable tests (non-converged refit): " + ", ".join(flaky))
    return Table("significance", "Significance (p-value) of each factor",
                 ("Factor", *families), tuple(rows), tuple(notes))


def contribution_table(contributions: Sequence[FactorContribution]) -> Table:
    """Factors in the given (descending delta) order with an ESG tag column."""
    rows = tuple(
        (str(i), c.factor, format_delta(c.delta_r2), "yes" if c.esg else "")
        for i, c in enumerate(contributions, start=1)
    )
    notes = [f"{STARS} |ΔR²| < 0.001"]
    if contributions:
        notes.append(f"baseline adjusted R² = {format_r2(contributions[0].baseline_adj_r2)}")
    return Table("delta_r2", "Change in GAM adjusted R² with the factor removed",
                 ("Rank", "Factor", "ΔR²", "ESG"), rows, tuple(notes))


def correlation_table(corr: CorrelationMatrix) -> Table:
    """Lower-triangular matrix of 2-decimal coefficients, row factor first."""
    names = corr.names
    rows = []
    for i, a in enumerate(names):
        cells = [format_corr(corr.r[i, j]) if j <= i else "" for j in range(len(names))]
        rows.append((a, *cells))
    return Table("correlation", "Pearson correlation coefficients (row factor, column factor)",
                 ("Factor", *names), tuple(rows))


def correlation_pairs_table(corr: CorrelationMatrix) -> Table:
    """Long form of the lower triangle (diagonal included) with strength labels."""
    names = corr.names
    rows = []
    for i, a in enumerate(names):
        for j in range(i + 1):
            r = float(corr.r[i, j])
            rows.append((a, names[j], format_corr(r), classify_strength(r).value))
    return Table("correlation_pairs", "Correlation strength by factor pair",
                 ("Row", "Column", "r", "Strength"), tuple(rows))


def redundancy_table(findings: Sequence[RedundancyFinding]) -> Table:
    rows = []
    for f in findings:
        da, db = ("", "") if f.delta_r2 is None else (format_delta(f.delta_r2[0]), format_delta(f.delta_r2[1]))
        rows.append((f.pair[0], f.pair[1], format_corr(f.r_value), f.label.value,
                     f.recommendation.value, da, db))
    return Table("redundancy", "Redundancy screening (|r| >= 0.10)",
                 ("Factor A", "Factor B", "r", "Strength", "Recommendation", "ΔR² A", "ΔR² B"),
                 tuple(rows))


def partial_effects_table(model, grid_points: int = 101) -> Table:
    """Centered partial effects on an even grid over each factor's training range.

    Continuous factors are reported in z-score and raw units; binary
    factors at 0 and 1.
    """
    rows = []
    for f, t in zip(model.factors, model.terms):
        if t.kind == "smooth":
            lo, hi = t.smooth.basis.domain
            z = np.linspace(lo, hi, grid_points)
        else:
            z = np.array([0.0, 1.0]) if f.is_binary else np.linspace(-2.0, 2.0, 5)
        eff = t(z)
        if f.name in model.norm:
            raw = model.norm.mean[f.name] + model.norm.sd[f.name] * z
        else:
            raw = z
        for zi, ri, ei in zip(z, raw, eff):
            rows.append((f.name, repr(float(zi)), repr(float(ri)), repr(float(ei))))
    return Table("partial_effects", "Centered partial effects",
                 ("factor", "z", "raw", "effect"), tuple(rows))
