"""Replayable exploration sessions over a dataset.

A session is a base dataset plus an ordered step log. The current state is
always reproducible by replaying the log, which is what undo and import do;
failing steps never alter a session. Analysis steps (pca, isomap, t_test,
null_estimate) attach JSON artifacts without touching the matrix, the other
steps transform it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import AnnotationTable, Dataset, Factor
from .errors import ValidationError
from . import preprocess
from .mds import isomap_embed
from .nullmodels import NullSpec, expected_projection_content, signal_noise_ratio
from .stats import multi_t_test
from .svd import compute_dual_svd, projection_content

SESSION_SCHEMA = "explomics.session/1"

STEP_KINDS = (
    "impute",
    "center",
    "standardize",
    "variance_filter",
    "group_center",
    "remove_samples",
    "pca",
    "isomap",
    "t_test",
    "null_estimate",
)


@dataclass(frozen=True)
class Step:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValidationError(f"unknown step kind {self.kind!r}")


@dataclass(frozen=True)
class StepRecord:
    """An executed step: normalized parameters plus what it produced."""

    kind: str
    params: dict
    seed: int | None
    dof_delta: int
    artifact: dict | None


@dataclass(frozen=True)
class SessionState:
    dataset: Dataset
    dof_adjustment: int = 0


@dataclass(frozen=True)
class Session:
    base: Dataset
    annotations: tuple = ()
    steps: tuple = ()
    detected_signals: tuple = ()
    state: SessionState = None

    @property
    def dataset(self) -> Dataset:
        return self.state.dataset

    def find_factor(self, name):
        return _find_factor(self.annotations, self.state.dataset, name)


def _find_factor(annotations, dataset, name):
    for table in annotations:
        if table.scope == "sample" and name in table.factors:
            return table.factor(name, dataset)
    raise ValidationError(f"no sample factor named {name!r}")


def new_session(dataset: Dataset, annotations=()) -> Session:
    return Session(
        base=dataset,
        annotations=tuple(annotations),
        steps=(),
        detected_signals=(),
        state=SessionState(dataset=dataset, dof_adjustment=0),
    )


def _require_int(params, key, default=None, minimum=None):
    value = params.get(key, default)
    if value is None:
        raise ValidationError(f"step parameter {key!r} is required")
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"step parameter {key!r} must be an integer")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"step parameter {key!r} must be >= {minimum}")
    return value


def _components_param(params, default=(1, 2, 3)):
    raw = params.get("components", list(default))
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ValidationError("components must be a non-empty list of indices")
    comps = []
    for c in raw:
        if not isinstance(c, (int, np.integer)) or isinstance(c, bool) or c < 1:
            raise ValidationError("components must be positive integers")
        comps.append(int(c))
    return sorted(set(comps))


def _was_standardized(records) -> bool:
    return any(r.kind == "standardize" for r in records)


def _float_list(a):
    return [float(x) for x in np.asarray(a).ravel()]


def _matrix_list(a):
    return [[float(x) for x in row] for row in np.asarray(a)]


def _exec_impute(session, records, state, step):
    from .dataset import impute_knn

    k = _require_int(step.params, "k", default=10, minimum=1)
    imputed = impute_knn(state.dataset, k=k)
    n_filled = int(state.dataset.missing.sum())
    return (
        replace(state, dataset=imputed),
        {"k": k},
        0,
        {"filled": n_filled},
        None,
    )


def _exec_center(session, records, state, step):
    values = preprocess.center_samples(state.dataset.complete_values())
    return (
        replace(state, dataset=state.dataset.with_values(values),
                dof_adjustment=state.dof_adjustment + preprocess.CENTER_DOF),
        {},
        preprocess.CENTER_DOF,
        None,
        None,
    )


def _exec_standardize(session, records, state, step):
    values, dropped = preprocess.standardize_variables(state.dataset.complete_values())
    ds = state.dataset
    if dropped.size:
        kept = np.setdiff1d(np.arange(ds.n_variables), dropped)
        dropped_ids = [ds.variable_ids[i] for i in dropped]
        ds = ds.subset_variables(kept)
    else:
        dropped_ids = []
    ds = ds.with_values(values)
    return (
        replace(state, dataset=ds,
                dof_adjustment=state.dof_adjustment + preprocess.CENTER_DOF),
        {},
        preprocess.CENTER_DOF,
        {"dropped_variable_ids": dropped_ids},
        None,
    )


def _exec_variance_filter(session, records, state, step):
    n = _require_int(step.params, "n", minimum=1)
    _, kept = preprocess.variance_filter(state.dataset.complete_values(), n)
    ds = state.dataset.subset_variables(kept)
    return (
        replace(state, dataset=ds),
        {"n": n},
        0,
        {"kept": int(kept.size)},
        None,
    )


def _exec_group_center(session, records, state, step):
    name = step.params.get("factor")
    ids = step.params.get("sample_ids")
    if ids is not None:
        # ad-hoc two-level split (e.g. a selected artifact cluster vs the rest)
        if not isinstance(ids, (list, tuple)) or not ids:
            raise ValidationError("group_center sample_ids must be a non-empty list")
        ids = sorted(str(i) for i in ids)
        current = state.dataset.sample_ids
        unknown = [i for i in ids if i not in current]
        if unknown:
            raise ValidationError(f"unknown sample ids {unknown[:5]}")
        if len(set(ids)) == len(current):
            raise ValidationError("selection covers every sample; nothing to split")
        chosen = set(ids)
        codes = np.array([0 if s in chosen else 1 for s in current])
        factor = Factor("selection", ("selected", "rest"), codes)
        params = {"sample_ids": ids}
    elif isinstance(name, str) and name:
        factor = _find_factor(session.annotations, state.dataset, name)
        params = {"factor": name}
    else:
        raise ValidationError("group_center needs a factor name or a sample_ids list")
    values = preprocess.group_mean_center(state.dataset.complete_values(), factor)
    dof = preprocess.group_center_dof(factor)
    return (
        replace(state, dataset=state.dataset.with_values(values),
                dof_adjustment=state.dof_adjustment + dof),
        params,
        dof,
        {"levels": list(factor.levels)},
        None,
    )


def _exec_remove_samples(session, records, state, step):
    ids = step.params.get("sample_ids")
    label = step.params.get("label", "")
    if not isinstance(ids, (list, tuple)) or not ids:
        raise ValidationError("remove_samples needs a non-empty sample_ids list")
    ids = [str(i) for i in ids]
    current_ids = state.dataset.sample_ids
    unknown = [i for i in ids if i not in current_ids]
    if unknown:
        raise ValidationError(f"unknown sample ids {unknown[:5]}")
    removal = set(ids)
    keep = [i for i, s in enumerate(current_ids) if s not in removal]
    if not keep:
        raise ValidationError("cannot remove every sample")
    ds = state.dataset.subset_samples(keep)
    signal = {"label": str(label), "sample_ids": sorted(removal)}
    return (
        replace(state, dataset=ds),
        {"sample_ids": sorted(removal), "label": str(label)},
        0,
        {"removed": len(removal)},
        signal,
    )


def _exec_pca(session, records, state, step):
    comps = _components_param(step.params)
    trials = _require_int(step.params, "null_trials", default=20, minimum=1)
    seed = 0 if step.seed is None else int(step.seed)
    values = state.dataset.complete_values()
    svd = compute_dual_svd(values)
    used = [c for c in comps if c <= svd.rank]
    if not used:
        raise ValidationError(f"no requested component <= rank {svd.rank}")
    observed = projection_content(svd, used)
    spec = NullSpec(
        p=state.dataset.n_variables,
        n=state.dataset.n_samples,
        standardized=_was_standardized(records),
        trials=trials,
        seed=seed,
    )
    null_mean, null_sd = expected_projection_content(spec, used)
    cols = [c - 1 for c in used]
    coords = svd.sample_basis[:, cols] * svd.singular_values[cols]
    artifact = {
        "components": used,
        "singular_values": _float_list(svd.singular_values),
        "alpha2_observed": observed,
        "null": {
            "mean": null_mean,
            "sd": null_sd,
            "trials": trials,
            "seed": seed,
            "standardized": spec.standardized,
        },
        "ratio": signal_noise_ratio(observed, null_mean),
        "sample_ids": list(state.dataset.sample_ids),
        "sample_coords": _matrix_list(coords),
    }
    return state, {"components": comps, "null_trials": trials}, 0, artifact, None


def _exec_isomap(session, records, state, step):
    comps = _components_param(step.params)
    k = _require_int(step.params, "k", default=2, minimum=1)
    policy = step.params.get("on_disconnect", "error")
    result = isomap_embed(points=state.dataset.complete_values(), k=k,
                          components=comps, on_disconnect=policy)
    embedded_ids = [state.dataset.sample_ids[i] for i in result.nodes]
    artifact = {
        "k": k,
        "components": list(result.components),
        "singular_values": _float_list(result.svd.singular_values),
        "alpha2_observed": projection_content(result.svd, result.components),
        "sample_ids": embedded_ids,
        "coords": _matrix_list(result.coords),
        "edges": [
            [int(i), int(j), float(w)]
            for (i, j), w in zip(result.graph.edges, result.graph.weights)
        ],
    }
    params = {"components": comps, "k": k, "on_disconnect": policy}
    return state, params, 0, artifact, None


def _exec_t_test(session, records, state, step):
    name = step.params.get("factor")
    level_a = step.params.get("level_a")
    level_b = step.params.get("level_b")
    variant = step.params.get("variant", "pooled")
    alpha = step.params.get("alpha", 0.05)
    if not isinstance(name, str) or level_a is None or level_b is None:
        raise ValidationError("t_test needs factor, level_a and level_b")
    if not isinstance(alpha, (int, float)) or not 0.0 < float(alpha) < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    factor = _find_factor(session.annotations, state.dataset, name)
    table = multi_t_test(
        state.dataset.complete_values(), factor, level_a, level_b,
        variant=variant, dof_adjustment=state.dof_adjustment,
        variable_ids=state.dataset.variable_ids,
    ).with_qvalues(float(alpha))
    params = {
        "factor": name,
        "level_a": str(level_a),
        "level_b": str(level_b),
        "variant": variant,
        "alpha": float(alpha),
    }
    return state, params, 0, {"table": table.to_dict()}, None


def _exec_null_estimate(session, records, state, step):
    comps = _components_param(step.params)
    trials = _require_int(step.params, "trials", default=20, minimum=1)
    seed = 0 if step.seed is None else int(step.seed)
    standardized = step.params.get("standardized")
    if standardized is None:
        standardized = _was_standardized(records)
    spec = NullSpec(
        p=state.dataset.n_variables,
        n=state.dataset.n_samples,
        standardized=bool(standardized),
        trials=trials,
        seed=seed,
    )
    mean, sd = expected_projection_content(spec, comps)
    artifact = {
        "mean": mean,
        "sd": sd,
        "p": spec.p,
        "n": spec.n,
        "components": comps,
        "trials": trials,
        "seed": seed,
        "standardized": spec.standardized,
    }
    params = {"components": comps, "trials": trials, "standardized": bool(standardized)}
    return state, params, 0, artifact, None


_EXECUTORS = {
    "impute": _exec_impute,
    "center": _exec_center,
    "standardize": _exec_standardize,
    "variance_filter": _exec_variance_filter,
    "group_center": _exec_group_center,
    "remove_samples": _exec_remove_samples,
    "pca": _exec_pca,
    "isomap": _exec_isomap,
    "t_test": _exec_t_test,
    "null_estimate": _exec_null_estimate,
}


def apply(session: Session, step: Step) -> Session:
    """Run one step and return the extended session; on error nothing changes."""
    executor = _EXECUTORS[step.kind]
    state, params, dof_delta, artifact, signal = executor(
        session, session.steps, session.state, step
    )
    record = StepRecord(kind=step.kind, params=params, seed=step.seed,
                        dof_delta=dof_delta, artifact=artifact)
    signals = session.detected_signals + ((signal,) if signal else ())
    return Session(
        base=session.base,
        annotations=session.annotations,
        steps=session.steps + (record,),
        detected_signals=signals,
        state=state,
    )


def remove_signal(session: Session, sample_ids, label) -> Session:
    """Record and remove a detected sample cluster."""
    return apply(session, Step(kind="remove_samples",
                               params={"sample_ids": list(sample_ids), "label": label}))


def replay(base: Dataset, annotations, steps) -> Session:
    """Rebuild a session by executing (kind, params, seed) triples in order."""
    session = new_session(base, annotations)
    for step in steps:
        session = apply(session, step)
    return session


def undo(session: Session) -> Session:
    """Drop the last step; the state is re-derived by replay."""
    if not session.steps:
        raise ValidationError("session log is empty; nothing to undo")
    return replay(
        session.base,
        session.annotations,
        [Step(kind=r.kind, params=r.params, seed=r.seed) for r in session.steps[:-1]],
    )


def export_session(session: Session) -> dict:
    """Portable report: dataset, annotations, step log and artifacts."""
    ds = session.base
    missing = [[int(j), int(k)] for j, k in zip(*np.nonzero(ds.missing))]
    return {
        "schema": SESSION_SCHEMA,
        "dataset": {
            "variable_ids": list(ds.variable_ids),
            "sample_ids": list(ds.sample_ids),
            "values": _matrix_list(np.where(ds.missing, 0.0, ds.values)),
            "missing": missing,
        },
        "annotations": [
            {"scope": t.scope, "factors": {k: dict(v) for k, v in t.factors.items()}}
            for t in session.annotations
        ],
        "steps": [
            {
                "kind": r.kind,
                "params": r.params,
                "seed": r.seed,
                "dof_delta": r.dof_delta,
                "artifact": r.artifact,
            }
            for r in session.steps
        ],
        "detected_signals": [dict(s) for s in session.detected_signals],
        "final_state": {
            "n_variables": session.dataset.n_variables,
            "n_samples": session.dataset.n_samples,
            "dof_adjustment": session.state.dof_adjustment,
        },
    }


def export_json(session: Session) -> str:
    return json.dumps(export_session(session), sort_keys=True)


def import_session(doc: dict) -> Session:
    """Rebuild a session from an exported report by replaying its log."""
    if doc.get("schema") != SESSION_SCHEMA:
        raise ValidationError(f"unsupported session schema {doc.get('schema')!r}")
    d = doc["dataset"]
    values = np.asarray(d["values"], dtype=np.float64)
    mask = np.zeros_like(values, dtype=bool)
    for j, k in d.get("missing", []):
        mask[j, k] = True
    values = np.where(mask, np.nan, values)
    base = Dataset(values, mask, d["variable_ids"], d["sample_ids"])
    annotations = tuple(
        AnnotationTable(scope=a["scope"], factors=a["factors"])
        for a in doc.get("annotations", [])
    )
    steps = [
        Step(kind=s["kind"], params=s.get("params", {}), seed=s.get("seed"))
        for s in doc.get("steps", [])
    ]
    return replay(base, annotations, steps)
