"""Tabular data: CSV ingestion, typing, summaries, and design-matrix encoding.

A :class:`Dataset` is an immutable rectangular table of named columns.
Columns are either numeric (float64 with NaN for missing) or categorical
(string values with an explicit level set, None for missing).  Type
inference is all-or-nothing per column: a single non-numeric cell makes
the whole column categorical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CsvParseError,
    DegenerateColumnError,
    EmptyDataError,
    EmptyGroupError,
    MultiGroupError,
    SchemaError,
    SpecValidationError,
)

MISSING_MARKERS = ("", "NA")

SEPARATORS = {"comma": ",", "semicolon": ";", "tab": "\t"}
QUOTES = {"none": None, "double": '"', "single": "'"}


def level_string(value) -> str:
    """Canonical string form of a level value.

    Integer-valued floats print without the decimal point so that a
    numeric column declared categorical yields dummy names like
    ``var.1`` rather than ``var.1.0``.
    """
    if isinstance(value, float):
        if math.isnan(value):
            raise ValueError("missing value has no level string")
        if value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.floating):
        return level_string(float(value))
    return str(value)


@dataclass(frozen=True)
class Column:
    """One named column; ``values`` is float ndarray or list of str/None."""

    name: str
    kind: str  # "numeric" | "categorical"
    values: object
    levels: tuple = ()  # categorical only; distinct non-missing values

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.kind == "numeric" and self.levels:
            raise ValueError("numeric columns store no level set")

    def __len__(self):
        return len(self.values)

    def is_missing(self) -> np.ndarray:
        if self.kind == "numeric":
            return np.isnan(self.values)
        return np.array([v is None for v in self.values], dtype=bool)

    def __eq__(self, other):
        if not isinstance(other, Column):
            return NotImplemented
        if (self.name, self.kind) != (other.name, other.kind):
            return False
        if self.kind == "numeric":
            return np.array_equal(self.values, other.values, equal_nan=True)
        return list(self.values) == list(other.values) and self.levels == other.levels


def numeric_column(name: str, values) -> Column:
    arr = np.asarray(values, dtype=float)
    return Column(name=name, kind="numeric", values=arr)


def categorical_column(name: str, values) -> Column:
    vals = [None if v is None else str(v) for v in values]
    levels = tuple(sorted({v for v in vals if v is not None}))
    return Column(name=name, kind="categorical", values=vals, levels=levels)


@dataclass(frozen=True)
class Dataset:
    """Immutable table of typed columns, all of equal length."""

    columns: tuple  # tuple of Column
    n_rows: int

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if any(not n for n in names):
            raise SchemaError("column names must be non-empty")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {', '.join(dupes)}")
        for c in self.columns:
            if len(c) != self.n_rows:
                raise SchemaError(
                    f"column {c.name!r} has {len(c)} entries, expected {self.n_rows}")

    @property
    def column_names(self):
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.n_rows == other.n_rows and list(self.columns) == list(other.columns)


def from_columns(columns) -> Dataset:
    cols = tuple(columns)
    if not cols:
        raise EmptyDataError("no columns")
    return Dataset(columns=cols, n_rows=len(cols[0]))


def take_rows(data: Dataset, row_ids) -> Dataset:
    """New Dataset holding only the given row indices, in order."""
    idx = np.asarray(row_ids, dtype=int)
    cols = []
    for c in data.columns:
        if c.kind == "numeric":
            cols.append(Column(name=c.name, kind="numeric", values=c.values[idx]))
        else:
            vals = [c.values[i] for i in idx]
            cols.append(Column(name=c.name, kind="categorical", values=vals,
                               levels=c.levels))
    return Dataset(columns=tuple(cols), n_rows=len(idx))


@dataclass(frozen=True)
class ParseOptions:
    header: bool = True
    separator: str = "comma"  # comma | semicolon | tab
    quote: str = "double"     # none | double | single

    def __post_init__(self):
        if self.separator not in SEPARATORS:
            raise ValueError(f"separator must be one of {sorted(SEPARATORS)}")
        if self.quote not in QUOTES:
            raise ValueError(f"quote must be one of {sorted(QUOTES)}")


def _csv_reader(text: str, options: ParseOptions):
    if QUOTES[options.quote] is None:
        return csv.reader(
            io.StringIO(text),
            delimiter=SEPARATORS[options.separator],
            quoting=csv.QUOTE_NONE,
            quotechar=None,
        )
    return csv.reader(
        io.StringIO(text),
        delimiter=SEPARATORS[options.separator],
        quotechar=QUOTES[options.quote],
    )


def _try_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(data: bytes | str, options: ParseOptions = ParseOptions()) -> Dataset:
    """Parse CSV bytes into a typed Dataset.

    A column is numeric when every non-missing cell parses as a number,
    categorical otherwise.  Missing values are the empty cell and the
    literal ``NA``.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = _csv_reader(text, options)

    records = []
    n_fields = None
    for record in reader:
        if not record:  # blank line
            continue
        if n_fields is None:
            n_fields = len(record)
        elif len(record) != n_fields:
            raise CsvParseError(
                f"row {reader.line_num} has {len(record)} fields, expected {n_fields}",
                row=reader.line_num)
        records.append(record)

    if not records:
        raise EmptyDataError("input contains no rows")

    if options.header:
        header = [h.strip() for h in records[0]]
        rows = records[1:]
    else:
        header = [f"V{i + 1}" for i in range(n_fields)]
        rows = records

    if not rows:
        raise EmptyDataError("input contains a header but no data rows")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"duplicate header names: {', '.join(dupes)}")
    if any(not h for h in header):
        raise SchemaError("empty header name")

    columns = []
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        parsed = []
        numeric = True
        for cell in raw:
            if cell.strip() in MISSING_MARKERS:
                parsed.append(None)
                continue
            value = _try_float(cell)
            if value is None:
                numeric = False
                break
            parsed.append(value)
        if numeric:
            arr = np.array(
                [np.nan if v is None else v for v in parsed], dtype=float)
            columns.append(Column(name=name, kind="numeric", values=arr))
        else:
            vals = [None if cell.strip() in MISSING_MARKERS else cell for cell in raw]
            levels = tuple(sorted({v for v in vals if v is not None}))
            columns.append(
                Column(name=name, kind="categorical", values=vals, levels=levels))

    return Dataset(columns=tuple(columns), n_rows=len(rows))


def _format_numeric(v: float) -> str:
    if math.isnan(v):
        return ""
    return repr(v)


def export_csv(data: Dataset, options: ParseOptions = ParseOptions(),
               extra_columns=None) -> bytes:
    """Serialize a Dataset back to CSV; inverse of :func:`load_csv`.

    ``extra_columns`` is an optional list of (name, float array) appended
    after the original columns (used for the data-and-weights export).
    """
    out = io.StringIO()
    quotechar = QUOTES[options.quote]
    writer = csv.writer(
        out,
        delimiter=SEPARATORS[options.separator],
        quotechar=quotechar if quotechar else '"',
        quoting=csv.QUOTE_MINIMAL if quotechar else csv.QUOTE_NONE,
        lineterminator="\n",
    )
    extras = list(extra_columns or [])
    header = data.column_names + [name for name, _ in extras]
    if options.header:
        writer.writerow(header)
    for i in range(data.n_rows):
        row = []
        for c in data.columns:
            if c.kind == "numeric":
                row.append(_format_numeric(float(c.values[i])))
            else:
                row.append("" if c.values[i] is None else c.values[i])
        for _, arr in extras:
            row.append(_format_numeric(float(arr[i])))
        writer.writerow(row)
    return out.getvalue().encode("utf-8")


@dataclass(frozen=True)
class AnalysisSpec:
    """The user's model set-up.

    Labels and reference levels are compared through
    :func:`level_string`, so ``"1"`` matches the numeric value 1.
    """

    treatment_var: str
    control_label: str
    treatment_label: str
    outcome_var: str
    numeric_confounders: tuple = ()
    categorical_confounders: tuple = ()  # (name, reference_level) pairs
    estimand: str = "ATE"

    def __post_init__(self):
        object.__setattr__(self, "numeric_confounders",
                           tuple(self.numeric_confounders))
        object.__setattr__(self, "categorical_confounders",
                           tuple((str(n), str(r)) for n, r in self.categorical_confounders))
        object.__setattr__(self, "control_label", str(self.control_label))
        object.__setattr__(self, "treatment_label", str(self.treatment_label))

    @property
    def confounder_names(self):
        return list(self.numeric_confounders) + [n for n, _ in self.categorical_confounders]

    def validate(self, data: Dataset):
        """Raise SpecValidationError listing every problem found."""
        errors = []
        named = [("treatment_var", self.treatment_var),
                 ("outcome_var", self.outcome_var)]
        named += [("numeric_confounders", n) for n in self.numeric_confounders]
        named += [("categorical_confounders", n)
                  for n, _ in self.categorical_confounders]
        for fieldname, name in named:
            if not data.has_column(name):
                errors.append((fieldname, f"column {name!r} not in dataset"))

        roles = [self.treatment_var, self.outcome_var] + self.confounder_names
        if len(set(roles)) != len(roles):
            dupes = sorted({n for n in roles if roles.count(n) > 1})
            errors.append(("spec", f"columns used in more than one role: {', '.join(dupes)}"))

        if self.estimand not in ("ATE", "ATT", "ATC"):
            errors.append(("estimand", f"unknown estimand {self.estimand!r}"))

        if self.control_label == self.treatment_label:
            errors.append(("labels", "control and treatment labels must differ"))
        elif data.has_column(self.treatment_var):
            present = _distinct_level_strings(data.column(self.treatment_var))
            for label, fieldname in ((self.control_label, "control_label"),
                                     (self.treatment_label, "treatment_label")):
                if label not in present:
                    errors.append(
                        (fieldname, f"label {label!r} not found in column "
                                    f"{self.treatment_var!r}"))

        if len(self.numeric_confounders) < 1:
            errors.append(("numeric_confounders",
                           "at least 1 numeric confounder is required"))
        if len(self.confounder_names) < 2:
            errors.append(("confounders", "at least 2 confounders are required"))

        for name in self.numeric_confounders:
            if data.has_column(name) and data.column(name).kind != "numeric":
                errors.append(("numeric_confounders",
                               f"column {name!r} is not numeric"))
        for name, ref in self.categorical_confounders:
            if data.has_column(name):
                if ref not in _distinct_level_strings(data.column(name)):
                    errors.append(("categorical_confounders",
                                   f"reference level {ref!r} is not a level of {name!r}"))

        if data.has_column(self.outcome_var) and data.column(self.outcome_var).kind != "numeric":
            errors.append(("outcome_var", "outcome must be numeric"))

        if errors:
            raise SpecValidationError(errors)


def _distinct_level_strings(col: Column) -> list:
    if col.kind == "categorical":
        return list(col.levels)
    vals = col.values[~np.isnan(col.values)]
    return sorted({level_string(v) for v in vals})


@dataclass(frozen=True)
class DesignMatrix:
    """Encoded analysis data: binary T, dummy-encoded X, outcome Y.

    Complete-case by construction; ``row_ids`` are the surviving rows'
    indices in the source Dataset.  When the requested estimand is ATC
    the treatment indicator is flipped and downstream code runs as ATT
    (``flipped`` records this for report relabeling).
    """

    T: np.ndarray
    X: np.ndarray
    column_names: tuple
    Y: np.ndarray
    row_ids: np.ndarray
    dropped_count: int
    treatment_name: str
    outcome_name: str
    estimand: str            # as requested: ATE | ATT | ATC
    numeric_cols: tuple      # design columns that came from numeric confounders
    flipped: bool = False

    @property
    def n(self) -> int:
        return len(self.T)

    @property
    def effective_estimand(self) -> str:
        """Estimand the engines actually target (ATC runs as ATT)."""
        return "ATE" if self.estimand == "ATE" else "ATT"

    def col(self, name: str) -> np.ndarray:
        return self.X[:, self.column_names.index(name)]

    def restrict(self, keep: np.ndarray) -> "DesignMatrix":
        return replace(
            self,
            T=self.T[keep], X=self.X[keep], Y=self.Y[keep],
            row_ids=self.row_ids[keep])

    def with_extra_column(self, name: str, values: np.ndarray) -> "DesignMatrix":
        return replace(
            self,
            X=np.column_stack([self.X, np.asarray(values, dtype=float)]),
            column_names=self.column_names + (name,))


def encode_design(data: Dataset, spec: AnalysisSpec) -> DesignMatrix:
    """Build the complete-case design matrix for a validated spec.

    Categorical confounders expand to k-1 indicator columns named
    ``<var>.<level>``; the reference level contributes none.
    """
    spec.validate(data)

    tcol = data.column(spec.treatment_var)
    distinct = _distinct_level_strings(tcol)
    if len(distinct) > 2:
        raise MultiGroupError(
            f"treatment column {spec.treatment_var!r} has {len(distinct)} "
            f"distinct values; only two treatment groups are supported")

    used = [spec.treatment_var, spec.outcome_var] + spec.confounder_names
    missing = np.zeros(data.n_rows, dtype=bool)
    for name in used:
        missing |= data.column(name).is_missing()
    keep = ~missing
    row_ids = np.flatnonzero(keep)
    if row_ids.size == 0:
        raise EmptyDataError("no complete-case rows remain")

    t_strings = _column_level_strings(tcol)
    control, treated = spec.control_label, spec.treatment_label
    if spec.estimand == "ATC":
        control, treated = treated, control
    T = np.full(data.n_rows, -1, dtype=np.int8)
    T[[i for i in range(data.n_rows) if t_strings[i] == control]] = 0
    T[[i for i in range(data.n_rows) if t_strings[i] == treated]] = 1
    T = T[keep]
    if (T == 0).sum() == 0 or (T == 1).sum() == 0:
        raise EmptyGroupError(
            f"one of the groups {spec.control_label!r}/{spec.treatment_label!r} "
            f"has no complete-case rows")

    Y = np.asarray(data.column(spec.outcome_var).values, dtype=float)[keep]

    blocks, names = [], []
    for name in spec.numeric_confounders:
        blocks.append(np.asarray(data.column(name).values, dtype=float)[keep])
        names.append(name)
    for name, ref in spec.categorical_confounders:
        col = data.column(name)
        strings = [t for i, t in enumerate(_column_level_strings(col)) if keep[i]]
        present = sorted(set(strings), key=_level_sort_key)
        if len(present) < 2:
            raise DegenerateColumnError(
                f"categorical confounder {name!r} has a single level "
                f"after dropping incomplete rows")
        if ref not in present:
            raise DegenerateColumnError(
                f"reference level {ref!r} of {name!r} has no rows left "
                f"after dropping incomplete rows")
        for lvl in present:
            if lvl == ref:
                continue
            blocks.append(np.array([1.0 if s == lvl else 0.0 for s in strings]))
            names.append(f"{name}.{lvl}")

    X = np.column_stack(blocks)
    return DesignMatrix(
        T=T, X=X, column_names=tuple(names), Y=Y, row_ids=row_ids,
        dropped_count=int(missing.sum()),
        treatment_name=spec.treatment_var, outcome_name=spec.outcome_var,
        estimand=spec.estimand,
        numeric_cols=tuple(spec.numeric_confounders),
        flipped=spec.estimand == "ATC")


def _column_level_strings(col: Column) -> list:
    """Per-row level string, None for missing."""
    if col.kind == "categorical":
        return list(col.values)
    return [None if np.isnan(v) else level_string(v) for v in col.values]


def _level_sort_key(s: str):
    try:
        return (0, float(s), "")
    except ValueError:
        return (1, 0.0, s)


def summarize(data: Dataset, group_by: str | None = None) -> dict:
    """Summary statistics table(s).

    Numeric columns get mean/sd/median/min/max (sd uses the n-1
    denominator); categorical columns get level counts.  With
    ``group_by``, one table per group keyed by level string.
    """
    if group_by is None:
        return _summarize_rows(data, np.ones(data.n_rows, dtype=bool))
    if not data.has_column(group_by):
        raise KeyError(group_by)
    gcol = data.column(group_by)
    strings = _column_level_strings(gcol)
    tables = {}
    for lvl in sorted({s for s in strings if s is not None}, key=_level_sort_key):
        mask = np.array([s == lvl for s in strings])
        tables[lvl] = _summarize_rows(data, mask, skip=group_by)
    return {"group_by": group_by, "groups": tables}


def _summarize_rows(data: Dataset, mask: np.ndarray, skip: str | None = None) -> dict:
    numeric, categorical = {}, {}
    for c in data.columns:
        if c.name == skip:
            continue
        if c.kind == "numeric":
            vals = c.values[mask]
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                stats = dict.fromkeys(("mean", "sd", "median", "min", "max"), None)
            else:
                sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
                stats = {
                    "mean": float(np.mean(vals)),
                    "sd": sd,
                    "median": float(np.median(vals)),
                    "min": float(np.min(vals)),
                    "max": float(np.max(vals)),
                }
            numeric[c.name] = stats
        else:
            counts = {}
            for i in np.flatnonzero(mask):
                v = c.values[i]
                if v is not None:
                    counts[v] = counts.get(v, 0) + 1
            categorical[c.name] = dict(sorted(counts.items()))
    return {"n_rows": int(mask.sum()), "numeric": numeric, "categorical": categorical}


def head_rows(data: Dataset, n: int = 5) -> list:
    """First ``n`` rows as display strings (missing rendered as empty)."""
    out = []
    for i in range(min(n, data.n_rows)):
        row = []
        for c in data.columns:
            if c.kind == "numeric":
                v = float(c.values[i])
                row.append("" if math.isnan(v) else _trim_float(v))
            else:
                row.append("" if c.values[i] is None else c.values[i])
        out.append(row)
    return out


def _trim_float(v: float) -> str:
    s = f"{v:.6g}"
    return s
