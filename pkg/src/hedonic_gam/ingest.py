"""CSV ingest: parse sale records, filter, deduplicate, build a Dataset.

Input is a UTF-8 CSV with a header row. Default column names are
``id, price, sqft, lot, beds, baths, year, lat, long, water, green,
access, sold_date``; pass a ``schema`` mapping field -> header to remap.
Bad rows are collected as rejects with their line numbers rather than
aborting the load.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from dateutil.relativedelta import relativedelta

from .data_model import DEFAULT_ROSTER, Dataset, FactorSpec, log_price
from .errors import ConfigError, DataError, EmptyInputError, SchemaError

log = logging.getLogger(__name__)

NUMERIC_FIELDS = ("price", "sqft", "lot", "beds", "baths", "year", "lat", "long")
FLAG_FIELDS = ("water", "green", "access")
FIELDS = ("listing_id",) + NUMERIC_FIELDS + FLAG_FIELDS + ("sold_date",)
DEFAULT_SCHEMA = {f: f for f in FIELDS} | {"listing_id": "id"}

_TRUE = {"1", "1.0", "true", "t", "yes", "y"}
_FALSE = {"0", "0.0", "false", "f", "no", "n"}


@dataclass(frozen=True)
class RawRecord:
    listing_id: str
    price: float
    sqft: float
    lot: float
    beds: float
    baths: float
    year: float
    lat: float
    long: float
    water: int
    green: int
    access: int
    sold_date: dt.date
    extra: Mapping[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not str(self.listing_id).strip():
            raise DataError("listing_id must be nonempty")

    def value(self, column: str) -> float:
        if column in self.extra:
            return self.extra[column]
        if column in NUMERIC_FIELDS or column in FLAG_FIELDS:
            return getattr(self, column)
        raise SchemaError(f"record has no column {column!r}")


class Reject(NamedTuple):
    line: int
    fields: tuple[str, ...]
    message: str


class LoadResult(NamedTuple):
    records: list
    rejects: list


def _parse_number(text):
    t = text.strip().replace(",", "").replace("$", "")
    if not t:
        raise ValueError("blank")
    v = float(t)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _parse_flag(text):
    t = text.strip().lower()
    if t in _TRUE:
        return 1
    if t in _FALSE:
        return 0
    raise ValueError(f"not a 0/1 flag: {text!r}")


def _parse_date(text):
    t = text.strip()
    if not t:
        raise ValueError("blank")
    return dt.date.fromisoformat(t[:10])


def load_csv(path, schema: Mapping[str, str] | None = None, extra_columns: Sequence[str] = ()) -> LoadResult:
    """Parse ``path`` into RawRecords plus a list of rejected rows.

    ``schema`` overrides entries of the default field -> header map.
    ``extra_columns`` are additional numeric headers kept in
    ``RawRecord.extra`` for custom factor rosters.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(FIELDS)
        if unknown:
            raise ConfigError(f"schema names unknown fields {sorted(unknown)}")
        mapping.update(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if not any(header):
            raise EmptyInputError(f"{path} has an empty header row")
        pos = {h: i for i, h in enumerate(header)}
        for fname, col in list(mapping.items()) + [(c, c) for c in extra_columns]:
            if col not in pos:
                raise SchemaError(f"required column {col!r} (field {fname}) missing from {path}")

        records, rejects = [], []
        for line, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            bad, values = [], {}

            def cell(col):
                i = pos[col]
                return row[i] if i < len(row) else ""

            lid = cell(mapping["listing_id"]).strip()
            if not lid:
                bad.append("listing_id")
            values["listing_id"] = lid
            for fname in NUMERIC_FIELDS:
                try:
                    values[fname] = _parse_number(cell(mapping[fname]))
                except ValueError:
                    bad.append(fname)
            if "price" not in bad and not values["price"] > 0:
                bad.append("price")
            for fname in FLAG_FIELDS:
                try:
                    values[fname] = _parse_flag(cell(mapping[fname]))
                except ValueError:
                    bad.append(fname)
            try:
                values["sold_date"] = _parse_date(cell(mapping["sold_date"]))
            except ValueError:
                bad.append("sold_date")
            extra = {}
            for col in extra_columns:
                try:
                    extra[col] = _parse_number(cell(col))
                except ValueError:
                    bad.append(col)
            if bad:
                rejects.append(Reject(line, tuple(bad), "unparseable or missing: " + ", ".join(bad)))
                continue
            records.append(RawRecord(**values, extra=extra))
    if rejects:
        log.warning("%s: %d rows rejected", path, len(rejects))
    return LoadResult(records, rejects)


@dataclass(frozen=True)
class FilterConfig:
    """Inclusive bounds applied to sale records.

    ``window_months=None`` disables the sale-date filter;
    ``reference_date=None`` anchors the window at the latest sale.
    """

    price_min: float = 100_000.0
    price_max: float = 10_000_000.0
    sqft_min: float = 750.0
    lot_min: float = 1000.0
    beds_min: float = 1.0
    baths_min: float = 1.0
    window_months: int | None = 36
    reference_date: dt.date | None = None

    def __post_init__(self):
        if not self.price_min < self.price_max:
            raise ConfigError("price_min must be below price_max")
        for name in ("price_min", "sqft_min", "lot_min", "beds_min", "baths_min"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.window_months is not None and self.window_months < 0:
            raise ConfigError("window_months must be >= 0")

    @classmethod
    def identity(cls) -> "FilterConfig":
        return cls(0.0, math.inf, 0.0, 0.0, 0.0, 0.0, None, None)

    def updated(self, **overrides) -> "FilterConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def apply_filters(records: Iterable[RawRecord], config: FilterConfig | None = None) -> list[RawRecord]:
    config = config or FilterConfig()
    records = list(records)
    start = end = None
    if config.window_months is not None and records:
        end = config.reference_date or max(r.sold_date for r in records)
        start = end - relativedelta(months=config.window_months)

    def keep(r):
        if not (config.price_min <= r.price <= config.price_max):
            return False
        if r.sqft < config.sqft_min or r.lot < config.lot_min:
            return False
        if r.beds < config.beds_min or r.baths < config.baths_min:
            return False
        if start is not None and not (start <= r.sold_date <= end):
            return False
        return True

    return [r for r in records if keep(r)]


class DedupeResult(NamedTuple):
    records: list
    duplicates: list


def dedupe(records: Iterable[RawRecord]) -> DedupeResult:
    """Keep the first record per listing id; later copies are reported."""
    seen, kept, dupes = set(), [], []
    for r in records:
        if r.listing_id in seen:
            dupes.append(r)
            continue
        seen.add(r.listing_id)
        kept.append(r)
    if dupes:
        log.info("dropped %d duplicate listings", len(dupes))
    return DedupeResult(kept, dupes)


def prepare_dataset(records: Sequence[RawRecord], roster: Sequence[FactorSpec] = DEFAULT_ROSTER) -> Dataset:
    """log10 prices and z-scored continuous factors for ``roster``."""
    records = list(records)
    if not records:
        raise EmptyInputError("no records left to build a dataset from")
    roster = tuple(roster)
    raw = np.array([[r.value(f.column) for f in roster] for r in records], dtype=float).reshape(len(records), len(roster))
    for j, f in enumerate(roster):
        if f.is_binary and not np.all(np.isin(raw[:, j], (0.0, 1.0))):
            raise DataError(f"binary factor {f.name!r} has values other than 0/1")
    y = log_price(np.array([r.price for r in records], dtype=float))
    return Dataset.from_raw(roster, raw, np.atleast_1d(y))


def ingest(path, filters: FilterConfig | None = None, roster=DEFAULT_ROSTER, schema=None):
    """load -> filter -> dedupe -> prepare. Returns (dataset, summary dict)."""
    extra = [f.column for f in roster if f.column not in NUMERIC_FIELDS + FLAG_FIELDS]
    loaded = load_csv(path, schema, extra_columns=extra)
    if not loaded.records and not loaded.rejects:
        raise EmptyInputError(f"{path} has no data rows")
    filtered = apply_filters(loaded.records, filters)
    deduped = dedupe(filtered)
    ds = prepare_dataset(deduped.records, roster)
    summary = {
        "rows_parsed": len(loaded.records),
        "rows_rejected": len(loaded.rejects),
        "rows_after_filters": len(filtered),
        "duplicates_dropped": len(deduped.duplicates),
        "observations": ds.n,
        "rejects": [r._asdict() for r in loaded.rejects],
    }
    return ds, summary


def write_records_csv(records: Iterable[RawRecord], path, schema: Mapping[str, str] | None = None) -> None:
    """Write records in the ingest CSV format (round-trips through load_csv)."""
    mapping = dict(DEFAULT_SCHEMA) | dict(schema or {})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([mapping[f] for f in FIELDS])
        for r in records:
            w.writerow([
                r.listing_id,
                *(repr(float(getattr(r, f))) for f in NUMERIC_FIELDS),
                *(str(int(getattr(r, f))) for f in FLAG_FIELDS),
                r.sold_date.isoformat(),
            ])


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Dump the normalized design: one column per factor plus ``logprice``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.names + ["logprice"])
        for i in range(dataset.n):
            w.writerow([repr(float(v)) for v in dataset.X[i]] + [repr(float(dataset.y[i]))])

