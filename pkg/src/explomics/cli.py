"""Command-line gateway for scripted pipelines.

Subcommands mirror the session step vocabulary; every analysis command can
drop rendered figures next to its delimited/JSON output via --figdir. Exit
codes: 0 success, 1 domain error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import figures
from .dataset import impute_knn, parse_annotations, parse_matrix, serialize_matrix
from .errors import ExplomicsError, ValidationError
from .nullmodels import NullSpec, expected_projection_content, largest_eigenvalue_edge
from .session import (
    SESSION_SCHEMA,
    Step,
    apply as apply_step,
    export_session,
    import_session,
    new_session,
)
from .stats import FLOAT_FORMAT, bh_reject, q_values

SCRIPT_SCHEMA = "explomics.session-script/1"

DELIMITERS = {"auto": "auto", "tab": "\t", "comma": ","}


def _read_dataset(args):
    with open(args.data, "r", encoding="utf-8") as handle:
        return parse_matrix(
            handle,
            delimiter=DELIMITERS[args.delimiter],
            orientation=args.orientation,
        )


def _read_annotations(path, scope, dataset, delimiter="auto"):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_annotations(handle, scope, dataset, delimiter=delimiter)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc, out):
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", out)


def _add_data_arguments(cmd):
    cmd.add_argument("data", help="delimited matrix file")
    cmd.add_argument("--delimiter", choices=list(DELIMITERS), default="auto")
    cmd.add_argument(
        "--orientation",
        choices=["variables-in-rows", "samples-in-rows"],
        default="variables-in-rows",
    )


def _components_from_keep(keep):
    if keep < 1:
        raise ValidationError("--keep must be >= 1")
    return list(range(1, keep + 1))


def _preprocess_steps(choice):
    if choice == "standardize":
        return [Step("standardize")]
    if choice == "center":
        return [Step("center")]
    return []


def _run_steps(dataset, annotations, steps):
    session = new_session(dataset, annotations)
    for step in steps:
        session = apply_step(session, step)
    return session


def cmd_import(args):
    dataset = _read_dataset(args)
    if args.annotations:
        _read_annotations(args.annotations, args.annotations_scope, dataset)
    n_missing = int(dataset.missing.sum())
    if args.impute_k is not None:
        dataset = impute_knn(dataset, k=args.impute_k)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(serialize_matrix(dataset))
    summary = {
        "n_variables": dataset.n_variables,
        "n_samples": dataset.n_samples,
        "missing_entries": n_missing,
        "imputed": args.impute_k is not None,
    }
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_pca(args):
    dataset = _read_dataset(args)
    steps = _preprocess_steps(args.preprocess)
    if args.filter is not None:
        steps.append(Step("variance_filter", {"n": args.filter}))
    steps.append(Step(
        "pca",
        {"components": _components_from_keep(args.keep), "null_trials": args.null_trials},
        seed=args.seed,
    ))
    session = _run_steps(dataset, (), steps)
    artifact = session.steps[-1].artifact
    _emit_json(artifact, args.out)
    if args.figdir:
        os.makedirs(args.figdir, exist_ok=True)
        figures.save_pca_figure(artifact, os.path.join(args.figdir, "pca.png"))
    return 0


def cmd_isomap(args):
    dataset = _read_dataset(args)
    steps = _preprocess_steps(args.preprocess)
    if args.filter is not None:
        steps.append(Step("variance_filter", {"n": args.filter}))
    steps.append(Step("isomap", {
        "components": _components_from_keep(args.keep),
        "k": args.k,
        "on_disconnect": args.on_disconnect,
    }))
    session = _run_steps(dataset, (), steps)
    artifact = session.steps[-1].artifact
    _emit_json(artifact, args.out)
    if args.figdir:
        os.makedirs(args.figdir, exist_ok=True)
        figures.save_isomap_figure(artifact, os.path.join(args.figdir, "isomap.png"))
    return 0


def _table_to_delimited(table):
    header = ["variable_id", "t", "df", "p", "q", "rejected"]
    lines = ["\t".join(header)]
    for i, vid in enumerate(table["variable_ids"]):
        lines.append("\t".join([
            vid,
            FLOAT_FORMAT % table["t"][i],
            FLOAT_FORMAT % table["df"][i],
            FLOAT_FORMAT % table["p"][i],
            FLOAT_FORMAT % table["q"][i],
            "true" if table["rejected"][i] else "false",
        ]))
    return "\n".join(lines) + "\n"


def cmd_ttest(args):
    dataset = _read_dataset(args)
    annotations = (_read_annotations(args.annotations, "sample", dataset),)
    steps = []
    if args.filter is not None:
        steps.append(Step("variance_filter", {"n": args.filter}))
    steps.append(Step("t_test", {
        "factor": args.factor,
        "level_a": args.a,
        "level_b": args.b,
        "variant": args.variant,
        "alpha": args.alpha,
    }))
    session = _run_steps(dataset, annotations, steps)
    table = session.steps[-1].artifact["table"]
    _emit(_table_to_delimited(table), args.out)
    if args.figdir:
        os.makedirs(args.figdir, exist_ok=True)
        figures.save_test_figure(table, os.path.join(args.figdir, "ttest.png"))
    return 0


def cmd_qvalues(args):
    with open(args.pvalues, "r", encoding="utf-8") as handle:
        tokens = [line.strip() for line in handle if line.strip()]
    try:
        pvals = np.array([float(tok.split()[0].split(",")[0]) for tok in tokens])
    except ValueError as exc:
        raise ValidationError(f"could not parse p-values: {exc}") from None
    q = q_values(pvals)
    rejected = np.zeros(pvals.size, dtype=bool)
    rejected[bh_reject(pvals, args.alpha)] = True
    lines = ["\t".join(["index", "p", "q", "rejected"])]
    for i in range(pvals.size):
        lines.append("\t".join([
            str(i + 1),
            FLOAT_FORMAT % pvals[i],
            FLOAT_FORMAT % q[i],
            "true" if rejected[i] else "false",
        ]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_null(args):
    spec = NullSpec(p=args.p, n=args.n, standardized=args.standardize,
                    trials=args.trials, seed=args.seed)
    components = _components_from_keep(args.keep)
    mean, sd = expected_projection_content(spec, components)
    doc = {
        "p": args.p,
        "n": args.n,
        "components": components,
        "trials": args.trials,
        "seed": args.seed,
        "standardized": args.standardize,
        "mean": mean,
        "sd": sd,
        "eigenvalue_edge": largest_eigenvalue_edge(args.p / args.n),
    }
    _emit_json(doc, args.out)
    if args.figdir:
        os.makedirs(args.figdir, exist_ok=True)
        figures.save_null_figure(doc, os.path.join(args.figdir, "null.png"))
    return 0


def _load_script(path):
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("schema") != SCRIPT_SCHEMA:
        raise ValidationError(
            f"session script must declare schema {SCRIPT_SCHEMA!r}"
        )
    return doc


def cmd_session_run(args):
    doc = _load_script(args.script)
    base_dir = os.path.dirname(os.path.abspath(args.script))
    spec = doc.get("dataset", {})
    if "path" in spec:
        path = spec["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        with open(path, "r", encoding="utf-8") as handle:
            dataset = parse_matrix(
                handle,
                delimiter=spec.get("delimiter", "auto"),
                orientation=spec.get("orientation", "variables-in-rows"),
            )
    elif "inline" in spec:
        d = spec["inline"]
        values = np.asarray(d["values"], dtype=np.float64)
        mask = np.zeros_like(values, dtype=bool)
        for j, k in d.get("missing", []):
            mask[j, k] = True
        from .dataset import Dataset

        dataset = Dataset(np.where(mask, np.nan, values), mask,
                          d["variable_ids"], d["sample_ids"])
    else:
        raise ValidationError("session script needs dataset.path or dataset.inline")
    annotations = []
    for entry in doc.get("annotations", []):
        if "path" in entry:
            path = entry["path"]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            annotations.append(_read_annotations(path, entry.get("scope", "sample"), dataset))
        else:
            from .dataset import AnnotationTable

            annotations.append(AnnotationTable(scope=entry["scope"], factors=entry["factors"]))
    steps = [
        Step(kind=s["kind"], params=s.get("params", {}), seed=s.get("seed"))
        for s in doc.get("steps", [])
    ]
    session = _run_steps(dataset, tuple(annotations), steps)
    report = export_session(session)
    _emit_json(report, args.out)
    if args.figdir:
        figures.render_session_figures(report, args.figdir)
    return 0


def cmd_export(args):
    with open(args.report, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("schema") != SESSION_SCHEMA:
        raise ValidationError(f"not a session report (schema {doc.get('schema')!r})")
    if args.verify:
        session = import_session(doc)
        if export_session(session) != doc:
            raise ValidationError("replay does not reproduce the stored report")
    os.makedirs(args.outdir, exist_ok=True)
    written = []
    for idx, step in enumerate(doc["steps"]):
        if step["kind"] == "t_test" and step.get("artifact"):
            path = os.path.join(args.outdir, f"step{idx:02d}_ttest.tsv")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(_table_to_delimited(step["artifact"]["table"]))
            written.append(path)
    written.extend(figures.render_session_figures(doc, args.outdir))
    summary = {
        "schema": doc["schema"],
        "steps": [s["kind"] for s in doc["steps"]],
        "final_state": doc["final_state"],
        "detected_signals": doc["detected_signals"],
        "files": [os.path.basename(w) for w in written],
    }
    path = os.path.join(args.outdir, "summary.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="explomics",
        description="Exploratory analysis of large-p small-N data matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cmd = sub.add_parser("import", help="parse, validate and optionally impute a matrix")
    _add_data_arguments(cmd)
    cmd.add_argument("--annotations", help="annotation table to validate against the matrix")
    cmd.add_argument("--annotations-scope", choices=["sample", "variable"], default="sample")
    cmd.add_argument("--impute-k", type=int, help="impute missing values with k neighbors")
    cmd.add_argument("--out", help="write the canonical serialized matrix here")
    cmd.set_defaults(func=cmd_import)

    cmd = sub.add_parser("pca", help="dual SVD projection with randomization calibration")
    _add_data_arguments(cmd)
    cmd.add_argument("--keep", type=int, default=3, help="number of leading components")
    cmd.add_argument("--filter", type=int, help="variance-filter to this many variables first")
    cmd.add_argument("--preprocess", choices=["standardize", "center", "none"],
                     default="standardize")
    cmd.add_argument("--null-trials", type=int, default=20)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--out")
    cmd.add_argument("--figdir", help="directory for rendered figures")
    cmd.set_defaults(func=cmd_pca)

    cmd = sub.add_parser("isomap", help="geodesic (graph) embedding of the samples")
    _add_data_arguments(cmd)
    cmd.add_argument("--keep", type=int, default=3)
    cmd.add_argument("--filter", type=int)
    cmd.add_argument("--preprocess", choices=["standardize", "center", "none"],
                     default="none")
    cmd.add_argument("-k", type=int, default=2, help="neighbors per sample")
    cmd.add_argument("--on-disconnect", choices=["error", "largest"], default="error")
    cmd.add_argument("--out")
    cmd.add_argument("--figdir")
    cmd.set_defaults(func=cmd_isomap)

    cmd = sub.add_parser("ttest", help="per-variable two-sample t-test with FDR control")
    _add_data_arguments(cmd)
    cmd.add_argument("--annotations", required=True)
    cmd.add_argument("--factor", required=True)
    cmd.add_argument("--a", required=True, help="first factor level")
    cmd.add_argument("--b", required=True, help="second factor level")
    cmd.add_argument("--alpha", type=float, default=0.05)
    cmd.add_argument("--variant", choices=["pooled", "welch"], default="pooled")
    cmd.add_argument("--filter", type=int)
    cmd.add_argument("--out")
    cmd.add_argument("--figdir")
    cmd.set_defaults(func=cmd_ttest)

    cmd = sub.add_parser("qvalues", help="q-values and step-down rejections for a p-value list")
    cmd.add_argument("pvalues", help="file with one p-value per line")
    cmd.add_argument("--alpha", type=float, default=0.05)
    cmd.add_argument("--out")
    cmd.set_defaults(func=cmd_qvalues)

    cmd = sub.add_parser("null", help="Monte-Carlo null projection content for a shape")
    cmd.add_argument("--p", type=int, required=True)
    cmd.add_argument("--n", type=int, required=True)
    cmd.add_argument("--keep", type=int, default=3)
    cmd.add_argument("--trials", type=int, default=20)
    cmd.add_argument("--seed", type=int, default=0)
    standardize = cmd.add_mutually_exclusive_group()
    standardize.add_argument("--standardize", dest="standardize", action="store_true")
    standardize.add_argument("--no-standardize", dest="standardize", action="store_false")
    cmd.set_defaults(standardize=True)
    cmd.add_argument("--out")
    cmd.add_argument("--figdir")
    cmd.set_defaults(func=cmd_null)

    cmd = sub.add_parser("session", help="session script operations")
    session_sub = cmd.add_subparsers(dest="session_command", required=True)
    run = session_sub.add_parser("run", help="execute a session script")
    run.add_argument("script")
    run.add_argument("--out", help="write the exported report here")
    run.add_argument("--figdir")
    run.set_defaults(func=cmd_session_run)

    cmd = sub.add_parser("export", help="unpack a session report into tables and figures")
    cmd.add_argument("report", help="session report JSON produced by 'session run'")
    cmd.add_argument("--outdir", required=True)
    cmd.add_argument("--verify", action="store_true",
                     help="replay the log and check it reproduces the report")
    cmd.set_defaults(func=cmd_export)

    cmd = sub.add_parser("serve", help="run the HTTP JSON gateway")
    cmd.add_argument("--host", default=os.environ.get("HOST", "127.0.0.1"))
    cmd.add_argument("--port", type=int, default=int(os.environ.get("PORT", "8350")))
    cmd.add_argument("--data-dir", default=os.environ.get("DATA_DIR"))
    cmd.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExplomicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
