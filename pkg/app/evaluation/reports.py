"""
Per-task aggregation, method comparisons and report files.

Overall scores are unweighted means of per-task means. Rows whose task is
``Average`` are published summary rows: they are kept apart as the
reported overall and never enter the per-task means.
"""
import itertools
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import pandas as pd

from core.exceptions import DataError, MissingArtifactError
from evaluation.metrics import paired_ttest


logger = logging.getLogger(__name__)

PROMPT_MODES = ("text", "none", "point", "tight_box", "loose_box")
SUMMARY_TASK = "Average"
RECORD_COLUMNS = ["method", "task", "sample_id", "dsc", "prompt_mode"]
FIXTURE_PATH = os.path.join(os.path.dirname(__file__), "fixtures",
                            "held_out_tables.csv")


@dataclass(frozen=True)
class EvalRecord:
    task: str
    sample_id: str
    dsc: float
    prompt_mode: str = "text"

    def __post_init__(self):
        if not 0.0 <= self.dsc <= 1.0:
            raise DataError(
                f"{self.sample_id}: dsc {self.dsc} outside [0, 1]"
            )
        if self.prompt_mode not in PROMPT_MODES:
            raise DataError(f"unknown prompt mode {self.prompt_mode!r}")


@dataclass(frozen=True)
class MethodComparison:
    method_a: str
    method_b: str
    delta: float
    t: float
    p: float
    degenerate: bool
    reported_delta: Optional[float] = None


@dataclass
class TaskReport:
    methods: List[str]
    tasks: List[str]
    task_means: pd.DataFrame
    overall: Dict[str, float]
    reported_overall: Dict[str, float] = field(default_factory=dict)
    comparisons: List[MethodComparison] = field(default_factory=list)

    def comparison(self, method_a, method_b):
        for item in self.comparisons:
            if (item.method_a, item.method_b) == (method_a, method_b):
                return item
        raise KeyError((method_a, method_b))


def records_frame(methods):
    """One row per record; sorted so aggregation ignores input order."""
    rows = [
        {"method": name, "task": r.task, "sample_id": r.sample_id,
         "dsc": r.dsc, "prompt_mode": r.prompt_mode}
        for name, records in methods.items() for r in records
    ]
    frame = pd.DataFrame(rows, columns=RECORD_COLUMNS)
    return frame.sort_values(["method", "task", "sample_id", "dsc"],
                             kind="mergesort").reset_index(drop=True)


def aggregate_report(methods):
    """Aggregate ``{method name: [EvalRecord, ...]}`` into a TaskReport.

    Every method must cover the same tasks. Comparisons run over every
    ordered pair in the given method order, with the paired t-test taken
    over per-task means.
    """
    if not methods:
        raise DataError("no methods to aggregate")
    names = list(methods)
    frame = records_frame(methods)
    summary = frame[frame.task == SUMMARY_TASK]
    frame = frame[frame.task != SUMMARY_TASK]

    tasks_by_method = {
        name: set(frame.loc[frame.method == name, "task"]) for name in names
    }
    tasks = sorted(tasks_by_method[names[0]])
    if not tasks:
        raise DataError(f"{names[0]} has no per-task records")
    for name in names[1:]:
        if tasks_by_method[name] != set(tasks):
            missing = sorted(set(tasks) ^ tasks_by_method[name])
            raise DataError(
                f"{name} and {names[0]} cover different tasks: "
                f"{missing[:5]}"
            )

    task_means = (frame.groupby(["task", "method"])["dsc"].mean()
                  .unstack("method").loc[tasks, names])
    overall = {name: float(task_means[name].mean()) for name in names}
    reported = {
        name: float(group.dsc.mean())
        for name, group in summary.groupby("method")
    }

    comparisons = []
    for a, b in itertools.combinations(names, 2):
        test = paired_ttest(task_means[a].to_numpy(),
                            task_means[b].to_numpy())
        reported_delta = None
        if a in reported and b in reported:
            reported_delta = reported[a] - reported[b]
        comparisons.append(MethodComparison(
            a, b, overall[a] - overall[b], test.t, test.p, test.degenerate,
            reported_delta,
        ))
    logger.info("aggregated %d methods over %d tasks", len(names),
                len(tasks))
    return TaskReport(names, tasks, task_means, overall, reported,
                      comparisons)


def load_table_fixture(path=FIXTURE_PATH):
    """Read a task/method/dsc table in percent as EvalRecords per method."""
    if not os.path.exists(path):
        raise MissingArtifactError(f"table {path} does not exist")
    frame = pd.read_csv(path)
    missing = {"task", "method", "dsc"} - set(frame.columns)
    if missing:
        raise DataError(f"{path} lacks columns {sorted(missing)}")
    methods = {}
    for row in frame.itertuples(index=False):
        methods.setdefault(row.method, []).append(
            EvalRecord(row.task, "table", float(row.dsc) / 100.0)
        )
    return methods


def write_records(methods, path):
    """Persist records so the report command can aggregate them later."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    records_frame(methods).to_csv(path, index=False, float_format="%.6f")
    return path


def read_records(path):
    if not os.path.exists(path):
        raise MissingArtifactError(f"records file {path} does not exist")
    frame = pd.read_csv(path, dtype={"sample_id": str})
    missing = set(RECORD_COLUMNS) - set(frame.columns)
    if missing:
        raise DataError(f"{path} lacks columns {sorted(missing)}")
    methods = {}
    for row in frame.itertuples(index=False):
        methods.setdefault(row.method, []).append(EvalRecord(
            row.task, row.sample_id, float(row.dsc), row.prompt_mode
        ))
    return methods


def percent(value):
    return f"{100.0 * value:.2f}"


def render_table(report):
    """Plain-text table: tasks as rows, methods as columns, in percent."""
    width = max(len(task) for task in report.tasks
                + ["Average (recomputed)"])
    columns = [max(len(name), 8) for name in report.methods]

    def line(label, cells):
        return "  ".join([label.ljust(width)] + [
            cell.rjust(size) for cell, size in zip(cells, columns)
        ])

    lines = [line("Task", report.methods)]
    lines.append("-" * len(lines[0]))
    for task in report.tasks:
        lines.append(line(task, [percent(report.task_means.at[task, name])
                                 for name in report.methods]))
    lines.append("-" * len(lines[0]))
    lines.append(line("Average (recomputed)",
                      [percent(report.overall[name])
                       for name in report.methods]))
    if report.reported_overall:
        lines.append(line("Average (reported)", [
            percent(report.reported_overall[name])
            if name in report.reported_overall else "-"
            for name in report.methods
        ]))
    lines.append("")
    for item in report.comparisons:
        text = (f"{item.method_a} - {item.method_b}: "
                f"{percent(item.delta)} recomputed")
        if item.reported_delta is not None:
            text += f", {percent(item.reported_delta)} reported"
        text += f"; t = {item.t:.3f}, p = {item.p:.4g}"
        if item.degenerate:
            text += " (zero variance)"
        lines.append(text)
    return "\n".join(lines) + "\n"


def write_report(report, out_dir):
    """Write report.csv, summary.csv and report.txt; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    per_task = (report.task_means.rename_axis(index="task", columns="method")
                .stack().rename("mean_dsc").reset_index()
                [["method", "task", "mean_dsc"]])
    overall = pd.DataFrame({
        "method": report.methods,
        "task": SUMMARY_TASK,
        "mean_dsc": [report.overall[name] for name in report.methods],
    })
    report_csv = os.path.join(out_dir, "report.csv")
    pd.concat([per_task, overall], ignore_index=True).to_csv(
        report_csv, index=False, float_format="%.6f"
    )

    summary_csv = os.path.join(out_dir, "summary.csv")
    pd.DataFrame([asdict(item) for item in report.comparisons],
                 columns=["method_a", "method_b", "delta", "t", "p",
                          "degenerate", "reported_delta"]).to_csv(
        summary_csv, index=False, float_format="%.6f"
    )

    report_txt = os.path.join(out_dir, "report.txt")
    with open(report_txt, "w", encoding="utf-8") as writer:
        writer.write(render_table(report))
    return report_csv, summary_csv, report_txt
