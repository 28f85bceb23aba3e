"""Command-line entry point: ``fairpipe run | validate | datasets | convert-uci``.

Exit codes for ``run``: 0 when every cell succeeds, 1 on a configuration
or dataset error (nothing is run), 2 when at least one cell failed or, with
``--audit``, violated test isolation. The report and provenance files are
written atomically.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from fairpipe.errors import ConfigError, FairpipeError
from fairpipe.experiment.audit import isolation_audit
from fairpipe.experiment.config import expand, read_config_file, validate_config
from fairpipe.experiment.report import atomic_write, dumps_provenance, format_csv, outcome_rows, provenance
from fairpipe.experiment.runner import RunFailure, _dataset_key, run_matrix
from fairpipe.registry import data_path, file_digest, get_entry, load_dataset, registry_ids

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status", "occupation",
    "relationship", "race", "sex", "capital-gain", "capital-loss", "hours-per-week", "native-country", "income",
]
GERMAN_COLUMNS = [
    "status", "month", "credit_history", "purpose", "credit_amount", "savings", "employment",
    "investment_as_income_percentage", "personal_status", "other_debtors", "residence_since", "property",
    "age", "installment_plans", "housing", "number_of_credits", "skill_level", "people_liable_for",
    "telephone", "foreign_worker", "credit",
]


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairpipe", description="Fairness-aware ML experiments with an isolated test set.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config (or a provenance file) and write the report")
    r.add_argument("--config", required=True, help="JSON config, or a provenance sidecar to re-execute")
    r.add_argument("--data-dir", default=".", help="directory holding the dataset CSVs")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seeds", type=_parse_seeds, help="comma-separated seeds overriding the config")
    r.add_argument("--parallel", type=int, default=1, help="number of worker processes")
    r.add_argument("--audit", action="store_true", help="audit test isolation and write audit.json")
    r.add_argument("--timings", action="store_true", help="also write per-phase wall-clock timings.json")
    r.add_argument("--quiet", action="store_true")

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")

    sub.add_parser("datasets", help="list registered datasets")

    c = sub.add_parser("convert-uci", help="add a header to a raw UCI adult.data or german.data file")
    c.add_argument("dataset", choices=("adult", "german"))
    c.add_argument("input")
    c.add_argument("output")
    return p


def _err(msg: str) -> None:
    print(f"fairpipe: {msg}", file=sys.stderr)


# -- run ---------------------------------------------------------------------------

_WORKER_DATA: dict = {}


def _worker_init(data_dir):
    _WORKER_DATA["data_dir"] = data_dir


def _serialize(outcome, digests, audit):
    """Reduce an outcome to what the report needs: rows, provenance text, audit, timings."""
    rows = outcome_rows(outcome)
    if isinstance(outcome, RunFailure):
        return outcome.run_id, rows, None, None, None, f"{outcome.step}: {outcome.error}"
    report = isolation_audit(outcome.trace) if audit else None
    doc = provenance(outcome, digests.get(_dataset_key(outcome.config.dataset)), report)
    return outcome.run_id, rows, dumps_provenance(doc), report, outcome.timings, None


def _worker_run(cell, digests, audit):
    cache = _WORKER_DATA.setdefault("datasets", {})
    key = _dataset_key(cell[0].dataset)
    if key not in cache:
        cache[key] = load_dataset(cell[0].dataset, _WORKER_DATA["data_dir"])
    return _serialize(run_matrix([cell], datasets=cache)[0], digests, audit)


def cmd_run(args) -> int:
    try:
        raw = read_config_file(args.config)
        diags = validate_config(raw)
        if diags:
            for d in diags:
                _err(f"config error: {d}")
            return 1
        cells = expand(raw, seeds=args.seeds)
        if not cells:
            _err("config error: seeds: empty seed list")
            return 1
        datasets, digests = {}, {}
        for cfg, _ in cells:
            key = _dataset_key(cfg.dataset)
            if key not in datasets:
                entry = get_entry(cfg.dataset)
                datasets[key] = load_dataset(entry, args.data_dir)
                digests[key] = file_digest(data_path(entry, args.data_dir))
    except (ConfigError, FairpipeError) as exc:
        _err(f"config error: {exc}")
        return 1

    def progress(i, result):
        if not args.quiet:
            status = "FAILED " + result[5] if result[5] else "ok"
            print(f"[{i + 1}/{len(cells)}] {result[0]} {status}", file=sys.stderr)

    results = []
    if args.parallel > 1:
        with ProcessPoolExecutor(args.parallel, initializer=_worker_init, initargs=(args.data_dir,)) as pool:
            futures = [pool.submit(_worker_run, cell, digests, args.audit) for cell in cells]
            for i, fut in enumerate(futures):
                results.append(fut.result())
                progress(i, results[-1])
    else:
        for i, cell in enumerate(cells):
            outcome = run_matrix([cell], datasets=datasets)[0]
            results.append(_serialize(outcome, digests, args.audit))
            progress(i, results[-1])

    out = Path(args.out)
    rows = [row for r in results for row in r[1]]
    for run_id, _, prov, _, _, _ in results:
        if prov is not None:
            atomic_write(out / "provenance" / f"{run_id}.json", prov)
    failures = [{"run_id": r[0], "error": r[5]} for r in results if r[5]]
    violations = {r[0]: [str(v) for v in r[3].violations] for r in results if r[3] is not None and not r[3].ok}
    if args.audit:
        atomic_write(out / "audit.json", json.dumps({"runs": len(results), "violations": violations}, indent=2, sort_keys=True) + "\n")
    if args.timings:
        timings = {r[0]: r[4] for r in results if r[4] is not None}
        atomic_write(out / "timings.json", json.dumps(timings, indent=2) + "\n")
    if failures:
        atomic_write(out / "failures.json", json.dumps(failures, indent=2) + "\n")
    atomic_write(out / "report.csv", format_csv(rows))

    if not args.quiet:
        print(f"{len(results)} runs, {len(failures)} failed, report at {out / 'report.csv'}", file=sys.stderr)
    for f in failures:
        _err(f"run {f['run_id']} failed at {f['error']}")
    for run_id, vs in violations.items():
        _err(f"run {run_id} isolation violations: {'; '.join(vs)}")
    return 2 if failures or violations else 0


# -- validate / datasets / convert -----------------------------------------------------


def cmd_validate(args) -> int:
    diags = validate_config(args.config)
    for d in diags:
        print(d)
    if not diags:
        print("ok")
    return 1 if diags else 0


def cmd_datasets(args) -> int:
    for rid in registry_ids():
        e = get_entry(rid)
        where = "bundled" if e.bundled else e.file
        print(f"{rid}\t{where}\t{e.source}")
    return 0


def convert_uci(dataset: str, src, dst) -> int:
    """Write a headered CSV from a raw UCI file; returns the number of rows written."""
    import csv

    header = ADULT_COLUMNS if dataset == "adult" else GERMAN_COLUMNS
    n = 0
    with open(src, encoding="utf-8") as fin, open(dst, "w", newline="", encoding="utf-8") as fout:
        w = csv.writer(fout, lineterminator="\n")
        w.writerow(header)
        for line in fin:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")] if dataset == "adult" else line.split()
            if len(cells) != len(header):
                raise FairpipeError(f"{src}: line with {len(cells)} fields, expected {len(header)}")
            w.writerow(cells)
            n += 1
    return n


def cmd_convert(args) -> int:
    try:
        n = convert_uci(args.dataset, args.input, args.output)
    except (OSError, FairpipeError) as exc:
        _err(str(exc))
        return 1
    print(f"wrote {n} rows to {args.output}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "datasets": cmd_datasets, "convert-uci": cmd_convert}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
