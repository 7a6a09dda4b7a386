"""Per-variable two-sample t-tests, BH FDR control, q-values and nulls.

A test run produces a :class:`TestTable` holding one row per variable; the
table exports as delimited text (variable_id, t, df, p, q, rejected). The
rejection rule is the step-down procedure over the sorted p-value list:
reject the hypotheses up to the largest i with p_(i) <= i*alpha/m. A
q-value is the smallest level at which that rule would reject the variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Factor
from .errors import ValidationError
from .special import student_t_two_sided_p

FLOAT_FORMAT = "%.17g"

#: q-values below this are conventionally reported as informative
Q_VALUE_REPORT_THRESHOLD = 0.2


def _group_stats(values):
    n = values.shape[-1]
    if n < 2:
        raise ValidationError("each group needs at least two samples")
    return values.mean(axis=-1), values.var(axis=-1, ddof=1), n


def _t_from_stats(mean_a, var_a, na, mean_b, var_b, nb, variant, dof_adjustment):
    diff = mean_a - mean_b
    if variant == "pooled":
        df = na + nb - 2 - dof_adjustment
        if np.any(np.asarray(df) < 1):
            raise ValidationError(
                f"adjusted degrees of freedom {df} < 1 (adjustment {dof_adjustment})"
            )
        sp2 = ((na - 1) * var_a + (nb - 1) * var_b) / (na + nb - 2)
        se = np.sqrt(sp2 * (1.0 / na + 1.0 / nb))
        df = np.broadcast_to(np.float64(df), np.shape(diff)).copy()
    elif variant == "welch":
        fa = var_a / na
        fb = var_b / nb
        se = np.sqrt(fa + fb)
        with np.errstate(divide="ignore", invalid="ignore"):
            df = (fa + fb) ** 2 / (fa**2 / (na - 1) + fb**2 / (nb - 1))
        df = np.where(se == 0.0, np.float64(na + nb - 2), df)
    else:
        raise ValidationError(f"unknown t-test variant {variant!r}")
    # zero spread: equal means give t = 0, p = 1; differing means are
    # infinitely significant and flagged degenerate by the caller
    zero_se = se == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / se
        t = np.where(zero_se & (diff == 0.0), 0.0, t)
        t = np.where(zero_se & (diff != 0.0), np.sign(diff) * np.inf, t)
    p = student_t_two_sided_p(t, df)
    return t, df, p


def two_sample_t(a, b, variant="pooled", dof_adjustment=0):
    """(t, df, two-sided p) for one variable measured in two groups."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValidationError("groups must be 1-D value arrays")
    mean_a, var_a, na = _group_stats(a)
    mean_b, var_b, nb = _group_stats(b)
    t, df, p = _t_from_stats(mean_a, var_a, na, mean_b, var_b, nb, variant, dof_adjustment)
    return float(t), float(df), float(p)


@dataclass(frozen=True)
class TestTable:
    """Per-variable test results; q and rejected appear after q_values ran."""

    variable_ids: tuple
    t: np.ndarray
    df: np.ndarray
    p: np.ndarray
    degenerate: np.ndarray           # a group had zero variance
    q: np.ndarray | None = None
    rejected: np.ndarray | None = None
    level: float | None = None
    params: dict = field(default_factory=dict)

    def with_qvalues(self, alpha) -> "TestTable":
        """Fill q-values and the rejection flags for level ``alpha``."""
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"level must lie in (0, 1), got {alpha}")
        q = q_values(self.p)
        rej = np.zeros(len(self.p), dtype=bool)
        rej[bh_reject(self.p, alpha)] = True
        return replace(self, q=q, rejected=rej, level=float(alpha))

    def to_delimited(self, delimiter="\t") -> str:
        header = ["variable_id", "t", "df", "p", "q", "rejected"]
        lines = [delimiter.join(header)]
        for i, vid in enumerate(self.variable_ids):
            cells = [
                vid,
                FLOAT_FORMAT % self.t[i],
                FLOAT_FORMAT % self.df[i],
                FLOAT_FORMAT % self.p[i],
                FLOAT_FORMAT % self.q[i] if self.q is not None else "NA",
                ("true" if self.rejected[i] else "false") if self.rejected is not None else "NA",
            ]
            lines.append(delimiter.join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        doc = {
            "variable_ids": list(self.variable_ids),
            "t": self.t.tolist(),
            "df": self.df.tolist(),
            "p": self.p.tolist(),
            "degenerate": self.degenerate.tolist(),
            "params": dict(self.params),
        }
        if self.q is not None:
            doc["q"] = self.q.tolist()
            doc["rejected"] = self.rejected.tolist()
            doc["level"] = self.level
            doc["n_rejected"] = int(self.rejected.sum())
        return doc


def _split_groups(values, factor: Factor, level_a, level_b):
    idx_a = factor.level_indices(level_a)
    idx_b = factor.level_indices(level_b)
    if idx_a.size < 2 or idx_b.size < 2:
        raise ValidationError(
            f"levels {level_a!r} ({idx_a.size} samples) and {level_b!r} "
            f"({idx_b.size} samples) both need at least two samples"
        )
    return values[:, idx_a], values[:, idx_b]


def multi_t_test(values, factor: Factor, level_a, level_b, variant="pooled",
                 dof_adjustment=0, variable_ids=None) -> TestTable:
    """Row-wise two-sample t-test between two factor levels.

    Variables where either group is constant are flagged ``degenerate`` but
    kept in the table.
    """
    values = np.asarray(values, dtype=np.float64)
    a, b = _split_groups(values, factor, level_a, level_b)
    mean_a, var_a, na = _group_stats(a)
    mean_b, var_b, nb = _group_stats(b)
    t, df, p = _t_from_stats(mean_a, var_a, na, mean_b, var_b, nb, variant, dof_adjustment)
    if variable_ids is None:
        variable_ids = tuple(f"v{i+1}" for i in range(values.shape[0]))
    return TestTable(
        variable_ids=tuple(variable_ids),
        t=np.atleast_1d(t),
        df=np.atleast_1d(np.asarray(df, dtype=np.float64)),
        p=np.atleast_1d(p),
        degenerate=np.atleast_1d((var_a == 0.0) | (var_b == 0.0)),
        params={
            "factor": factor.name,
            "level_a": level_a,
            "level_b": level_b,
            "variant": variant,
            "dof_adjustment": int(dof_adjustment),
        },
    )


def bh_reject(pvals, alpha) -> np.ndarray:
    """Indices rejected by the step-down rule at level ``alpha``.

    Sort p ascending and find the largest i with p_(i) <= i*alpha/m; the
    hypotheses at sorted positions 1..i are rejected.
    """
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError("p-values must be a 1-D array")
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValidationError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"level must lie in (0, 1), got {alpha}")
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = alpha * np.arange(1, m + 1) / m
    passing = np.nonzero(p[order] <= thresholds)[0]
    if passing.size == 0:
        return np.empty(0, dtype=np.intp)
    cutoff = passing[-1] + 1
    return np.sort(order[:cutoff])


def q_values(pvals) -> np.ndarray:
    """Smallest level at which each hypothesis would be rejected.

    On the sorted list q_(i) = min over j >= i of m * p_(j) / j, mapped back
    to the original order.
    """
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError("p-values must be a 1-D array")
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValidationError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    q = np.empty(m, dtype=np.float64)
    q[order] = q_sorted
    return q


def permutation_null(values, factor: Factor, level_a, level_b, trials, seed,
                     variant="pooled") -> np.ndarray:
    """Per-variable empirical p from uniform label permutations.

    The generator for trial i derives deterministically from (seed, i), so
    a fixed seed reproduces identical p-vectors regardless of scheduling.
    The estimator is (1 + #{permuted |t| >= observed |t|}) / (trials + 1).
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    values = np.asarray(values, dtype=np.float64)
    idx_a = factor.level_indices(level_a)
    idx_b = factor.level_indices(level_b)
    if idx_a.size < 2 or idx_b.size < 2:
        raise ValidationError("both levels need at least two samples")
    pool = np.concatenate([idx_a, idx_b])
    na = idx_a.size
    sub = values[:, pool]

    def abs_t(cols_a, cols_b):
        mean_a, var_a, n_a = _group_stats(sub[:, cols_a])
        mean_b, var_b, n_b = _group_stats(sub[:, cols_b])
        t, _, _ = _t_from_stats(mean_a, var_a, n_a, mean_b, var_b, n_b, variant, 0)
        return np.abs(t)

    observed = abs_t(np.arange(na), np.arange(na, pool.size))
    exceed = np.zeros(values.shape[0], dtype=np.int64)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        perm = rng.permutation(pool.size)
        exceed += abs_t(perm[:na], perm[na:]) >= observed
    return (1.0 + exceed) / (trials + 1.0)


@dataclass(frozen=True)
class ConfusionCounts:
    """Outcome counts of a multiple-testing run against known truth."""

    true_null_accepted: int    # U
    true_null_rejected: int    # V
    alternative_accepted: int  # T
    alternative_rejected: int  # S

    def __post_init__(self):
        for v in (self.true_null_accepted, self.true_null_rejected,
                  self.alternative_accepted, self.alternative_rejected):
            if v < 0:
                raise ValidationError("counts must be non-negative")

    @property
    def m(self):
        return (self.true_null_accepted + self.true_null_rejected
                + self.alternative_accepted + self.alternative_rejected)

    @property
    def m0(self):
        return self.true_null_accepted + self.true_null_rejected

    @property
    def m1(self):
        return self.alternative_accepted + self.alternative_rejected

    @property
    def n_rejected(self):
        return self.true_null_rejected + self.alternative_rejected


@dataclass(frozen=True)
class DiscoveryRates:
    """Observed discovery-rate statistics; undefined ratios report 0."""

    fdr: float   # V / R, 0 when nothing is rejected
    fndr: float  # T / (m - R), 0 when everything is rejected
    fnr: float   # T / (T + S)
    fpr: float   # V / (U + V)


def discovery_rates(is_alternative, rejected, m=None):
    """Confusion counts and rates from truth flags and a rejected index set.

    ``is_alternative`` is a boolean array (True where the alternative holds);
    ``rejected`` is an index array or boolean mask of rejections.
    """
    truth = np.asarray(is_alternative, dtype=bool)
    rej = np.zeros(truth.size, dtype=bool)
    rejected = np.asarray(rejected)
    if rejected.size:
        if rejected.dtype == bool:
            rej |= rejected
        else:
            rej[rejected.astype(np.intp)] = True
    u = int(np.sum(~truth & ~rej))
    v = int(np.sum(~truth & rej))
    t = int(np.sum(truth & ~rej))
    s = int(np.sum(truth & rej))
    counts = ConfusionCounts(u, v, t, s)
    r = counts.n_rejected
    rates = DiscoveryRates(
        fdr=v / r if r > 0 else 0.0,
        fndr=t / (counts.m - r) if counts.m > r else 0.0,
        fnr=t / counts.m1 if counts.m1 > 0 else 0.0,
        fpr=v / counts.m0 if counts.m0 > 0 else 0.0,
    )
    return counts, rates
