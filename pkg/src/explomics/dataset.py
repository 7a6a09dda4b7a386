"""Data matrix loading, validation, annotation and KNN imputation.

The canonical object is :class:`Dataset`: a p x N matrix of measurements
(variables in rows, samples in columns) plus a missing mask and identifier
lists. Delimited text is the interchange format; "NA", "NaN" and empty cells
mark missing values, serialization always emits "NA".
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

MISSING_TOKENS = {"na", "nan", ""}

#: significant digits used when rendering matrix entries; enough for an exact
#: float64 round trip.
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Dataset:
    """Immutable p x N data matrix with missing mask and identifiers."""

    values: np.ndarray
    missing: np.ndarray
    variable_ids: tuple
    sample_ids: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        missing = np.asarray(self.missing, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        if values.ndim != 2:
            raise ValidationError("values must be a 2-D matrix")
        p, n = values.shape
        if p < 1 or n < 1:
            raise ValidationError("matrix must have at least one row and one column")
        if missing.shape != values.shape:
            raise ValidationError("missing mask shape differs from values shape")
        if len(self.variable_ids) != p:
            raise ValidationError(f"{len(self.variable_ids)} variable ids for {p} rows")
        if len(self.sample_ids) != n:
            raise ValidationError(f"{len(self.sample_ids)} sample ids for {n} columns")
        for name, ids in (("variable", self.variable_ids), ("sample", self.sample_ids)):
            seen = set()
            for i in ids:
                if i in seen:
                    raise ValidationError(f"duplicate {name} id {i!r}")
                seen.add(i)
        if not np.all(np.isfinite(values[~missing])):
            raise ValidationError("non-missing entries must be finite")
        values.setflags(write=False)
        missing.setflags(write=False)

    @property
    def n_variables(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]

    @property
    def has_missing(self):
        return bool(self.missing.any())

    def complete_values(self) -> np.ndarray:
        """Return the value matrix, requiring that nothing is missing."""
        if self.has_missing:
            raise ValidationError(
                "dataset has missing entries; impute before numeric analysis"
            )
        return self.values

    def with_values(self, values, missing=None) -> "Dataset":
        if missing is None:
            missing = np.zeros_like(np.asarray(values, dtype=float), dtype=bool)
        return Dataset(values, missing, self.variable_ids, self.sample_ids)

    def subset_samples(self, keep_indices) -> "Dataset":
        keep = np.asarray(keep_indices, dtype=int)
        return Dataset(
            self.values[:, keep],
            self.missing[:, keep],
            self.variable_ids,
            tuple(self.sample_ids[i] for i in keep),
        )

    def subset_variables(self, keep_indices) -> "Dataset":
        keep = np.asarray(keep_indices, dtype=int)
        return Dataset(
            self.values[keep, :],
            self.missing[keep, :],
            tuple(self.variable_ids[i] for i in keep),
            self.sample_ids,
        )


@dataclass(frozen=True)
class Factor:
    """A nominal factor: every sample carries exactly one level."""

    name: str
    levels: tuple
    codes: np.ndarray  # per-sample level index

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.intp)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) == 0:
            raise ValidationError(f"factor {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValidationError(f"factor {self.name!r} has duplicate levels")
        if codes.min(initial=0) < 0 or codes.max(initial=0) >= len(self.levels):
            raise ValidationError(f"factor {self.name!r} has out-of-range level codes")
        present = np.bincount(codes, minlength=len(self.levels))
        empty = [self.levels[i] for i in np.nonzero(present == 0)[0]]
        if empty:
            raise ValidationError(f"factor {self.name!r} has empty levels {empty}")
        codes.setflags(write=False)

    def level_indices(self, level) -> np.ndarray:
        """Sample indices carrying ``level``."""
        if level not in self.levels:
            raise ValidationError(f"unknown level {level!r} of factor {self.name!r}")
        return np.nonzero(self.codes == self.levels.index(level))[0]


@dataclass
class AnnotationTable:
    """Named factors keyed by variable or sample identifier."""

    scope: str  # "variable" or "sample"
    factors: dict = field(default_factory=dict)  # name -> {identifier: label}

    def __post_init__(self):
        if self.scope not in ("variable", "sample"):
            raise ValidationError(f"scope must be 'variable' or 'sample', got {self.scope!r}")

    def factor(self, name, dataset: Dataset) -> Factor:
        """Materialize a full :class:`Factor` over the dataset's samples/variables."""
        if name not in self.factors:
            raise ValidationError(f"unknown factor {name!r}")
        ids = dataset.sample_ids if self.scope == "sample" else dataset.variable_ids
        labels = self.factors[name]
        missing_ids = [i for i in ids if i not in labels]
        if missing_ids:
            raise ValidationError(
                f"factor {name!r} does not annotate {self.scope} ids {missing_ids[:5]}"
            )
        levels = []
        codes = np.empty(len(ids), dtype=np.intp)
        index = {}
        for pos, i in enumerate(ids):
            label = labels[i]
            if label not in index:
                index[label] = len(levels)
                levels.append(label)
            codes[pos] = index[label]
        return Factor(name, tuple(levels), codes)


def _detect_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def _read_table(stream, delimiter):
    if hasattr(stream, "read"):
        text = stream.read()
    else:
        text = stream
    lines = text.splitlines()
    # trailing blank lines are harmless
    while lines and lines[-1].strip() == "":
        lines.pop()
    if not lines:
        raise ParseError("empty input")
    if delimiter in (None, "auto"):
        delimiter = _detect_delimiter(lines[0])
    rows = [line.split(delimiter) for line in lines]
    return rows, delimiter


def _parse_cell(token, row, column):
    stripped = token.strip()
    if stripped.lower() in MISSING_TOKENS:
        return np.nan, True
    try:
        value = float(stripped)
    except ValueError:
        raise ParseError(f"non-numeric cell {token!r}", row=row, column=column) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite cell {token!r}", row=row, column=column)
    return value, False


def parse_matrix(stream, delimiter="auto", orientation="variables-in-rows") -> Dataset:
    """Parse delimited text into a :class:`Dataset`.

    The first row holds sample ids and the first column variable ids (for the
    default ``variables-in-rows`` orientation; ``samples-in-rows`` transposes).
    Cell positions in errors are 1-based and refer to the file as written.
    """
    if orientation not in ("variables-in-rows", "samples-in-rows"):
        raise ParseError(f"unknown orientation {orientation!r}")
    rows, _ = _read_table(stream, delimiter)
    header = rows[0]
    if len(header) < 2:
        raise ParseError("header must contain at least one id beyond the corner cell", row=1)
    col_ids = [c.strip() for c in header[1:]]
    width = len(header)
    row_ids = []
    data = np.empty((len(rows) - 1, width - 1), dtype=np.float64)
    mask = np.zeros_like(data, dtype=bool)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(
                f"ragged row: expected {width} cells, found {len(row)}", row=i
            )
        row_ids.append(row[0].strip())
        for j, token in enumerate(row[1:], start=2):
            value, is_missing = _parse_cell(token, i, j)
            data[i - 2, j - 2] = value
            mask[i - 2, j - 2] = is_missing
    if orientation == "variables-in-rows":
        variable_ids, sample_ids = row_ids, col_ids
    else:
        variable_ids, sample_ids = col_ids, row_ids
        data, mask = data.T.copy(), mask.T.copy()
    try:
        return Dataset(data, mask, variable_ids, sample_ids)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def serialize_matrix(dataset: Dataset, delimiter="\t") -> str:
    """Render a dataset as delimited text; missing entries become "NA"."""
    lines = [delimiter.join([""] + list(dataset.sample_ids))]
    for j, vid in enumerate(dataset.variable_ids):
        cells = [vid]
        for k in range(dataset.n_samples):
            if dataset.missing[j, k]:
                cells.append("NA")
            else:
                cells.append(FLOAT_FORMAT % dataset.values[j, k])
        lines.append(delimiter.join(cells))
    return "\n".join(lines) + "\n"


def parse_annotations(stream, scope, dataset: Dataset, delimiter="auto") -> AnnotationTable:
    """Parse a delimited annotation table keyed by variable or sample id.

    The first column holds identifiers, remaining columns are one factor each.
    Identifiers that do not occur in ``dataset`` are rejected; empty cells
    leave the identifier unannotated for that factor.
    """
    rows, _ = _read_table(stream, delimiter)
    header = rows[0]
    if len(header) < 2:
        raise ParseError("annotation table needs an id column and at least one factor", row=1)
    factor_names = [c.strip() for c in header[1:]]
    for name in factor_names:
        if not name:
            raise ParseError("empty factor name in header", row=1)
    if len(set(factor_names)) != len(factor_names):
        raise ParseError("duplicate factor name in header", row=1)
    known = set(dataset.sample_ids if scope == "sample" else dataset.variable_ids)
    factors = {name: {} for name in factor_names}
    seen_ids = set()
    width = len(header)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"ragged row: expected {width} cells, found {len(row)}", row=i)
        ident = row[0].strip()
        if ident not in known:
            raise ParseError(f"unknown {scope} id {ident!r}", row=i)
        if ident in seen_ids:
            raise ParseError(f"duplicate annotation for id {ident!r}", row=i)
        seen_ids.add(ident)
        for name, token in zip(factor_names, row[1:]):
            label = token.strip()
            if label:
                factors[name][ident] = label
    for name, labels in factors.items():
        if not labels:
            raise ParseError(f"factor {name!r} is empty")
    return AnnotationTable(scope=scope, factors=factors)


def impute_knn(dataset: Dataset, k: int = 10) -> Dataset:
    """Fill missing entries by averaging the k nearest variables.

    Distances between variables are euclidean over mutually observed
    coordinates of the original data; a neighbor is a candidate for entry
    (j, c) only if its own value at column c is observed. Ties in distance
    break toward the lower variable index. When fewer than k candidates
    exist the variable's own observed mean is used and a warning is emitted.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not dataset.has_missing:
        return dataset
    values = dataset.values
    observed = ~dataset.missing
    n_obs = observed.sum(axis=1)
    dead = np.nonzero(n_obs == 0)[0]
    if dead.size:
        raise ValidationError(
            f"variable {dataset.variable_ids[dead[0]]!r} has no observed values"
        )
    filled = values.copy()
    filled[dataset.missing] = 0.0  # placeholder, never read through the mask
    row_means = (filled * observed).sum(axis=1) / n_obs
    out = values.copy()
    fallbacks = 0
    for j in np.nonzero(dataset.missing.any(axis=1))[0]:
        # squared euclidean distance to every other variable over shared coords
        shared = observed & observed[j]
        diff = np.where(shared, filled - filled[j], 0.0)
        dist2 = (diff * diff).sum(axis=1)
        dist2[~shared.any(axis=1)] = np.inf  # no overlap: not comparable
        dist2[j] = np.inf
        order = np.argsort(dist2, kind="stable")
        for c in np.nonzero(dataset.missing[j])[0]:
            ranked = order[observed[order, c] & np.isfinite(dist2[order])]
            if ranked.size < k:
                out[j, c] = row_means[j]
                fallbacks += 1
            else:
                out[j, c] = filled[ranked[:k], c].mean()
    if fallbacks:
        warnings.warn(
            f"{fallbacks} missing entries had fewer than k={k} candidate neighbors; "
            "used the variable mean instead",
            stacklevel=2,
        )
    return dataset.with_values(out)
