"""
Tests for report aggregation and the report command
"""
import os
import random
import tempfile
from io import StringIO

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import DataError
from evaluation.reports import (
    EvalRecord,
    aggregate_report,
    load_table_fixture,
    read_records,
    render_table,
    write_records,
    write_report,
)


PUBLISHED = {
    "Ours": 0.7086,
    "BiomedParse": 0.3193,
    "MedSAM (loose)": 0.5207,
    "MedSAM (tight)": 0.6859,
}
RECOMPUTED = {
    "Ours": 0.6333,
    "BiomedParse": 0.1200,
    "MedSAM (loose)": 0.2755,
    "MedSAM (tight)": 0.6356,
}


def records(*rows):
    return [EvalRecord(task, sample, value) for task, sample, value in rows]


class EvalRecordTests(SimpleTestCase):

    def test_dsc_must_be_a_fraction(self):
        """Test that DSC must be a fraction."""
        with self.assertRaises(DataError):
            EvalRecord("liver", "s0", 1.2)

    def test_prompt_mode_must_be_known(self):
        """Test that prompt mode must be known."""
        with self.assertRaises(DataError):
            EvalRecord("liver", "s0", 0.5, prompt_mode="scribble")


class AggregateReportTests(SimpleTestCase):
    """Test aggregate_report on small hand-built record sets."""

    def test_overall_is_unweighted_over_tasks(self):
        """Test that overall is unweighted over tasks."""
        report = aggregate_report({"m": records(
            ("liver", "a", 1.0), ("liver", "b", 1.0), ("liver", "c", 0.4),
            ("kidney", "d", 0.2),
        )})

        self.assertAlmostEqual(report.task_means.at["liver", "m"], 0.8)
        self.assertAlmostEqual(report.overall["m"], 0.5)

    def test_identical_methods_have_no_difference(self):
        """Test that identical methods have no difference."""
        rows = records(("liver", "a", 0.7), ("kidney", "b", 0.3),
                       ("spleen", "c", 0.5))

        report = aggregate_report({"a": rows, "b": list(rows)})

        comparison = report.comparison("a", "b")
        self.assertEqual(comparison.delta, 0.0)
        self.assertEqual(comparison.p, 1.0)
        self.assertEqual(comparison.t, 0.0)

    def test_record_order_does_not_matter(self):
        """Test that record order does not matter."""
        rng = random.Random(0)
        rows = [EvalRecord(f"task{i % 7}", f"s{i}", rng.random())
                for i in range(200)]
        shuffled = list(rows)
        rng.shuffle(shuffled)

        first = aggregate_report({"m": rows})
        second = aggregate_report({"m": shuffled})

        self.assertEqual(first.overall, second.overall)

    def test_task_coverage_mismatch_raises(self):
        """Test that task coverage mismatch raises."""
        with self.assertRaises(DataError):
            aggregate_report({
                "a": records(("liver", "s", 0.5), ("kidney", "s", 0.5)),
                "b": records(("liver", "s", 0.5)),
            })

    def test_summary_rows_are_kept_apart(self):
        """Test that summary rows are kept apart."""
        report = aggregate_report({"m": records(
            ("liver", "s", 0.2), ("kidney", "s", 0.4),
            ("Average", "table", 0.9),
        )})

        self.assertEqual(report.tasks, ["kidney", "liver"])
        self.assertAlmostEqual(report.overall["m"], 0.3)
        self.assertEqual(report.reported_overall, {"m": 0.9})

    def test_no_methods_raises(self):
        """Test an empty record set raises."""
        with self.assertRaises(DataError):
            aggregate_report({})


class TableFixtureTests(SimpleTestCase):
    """Test the shipped held-out table."""

    def setUp(self):
        self.report = aggregate_report(load_table_fixture())

    def test_published_averages(self):
        """Test the averages of the shipped table."""
        for method, value in PUBLISHED.items():
            self.assertAlmostEqual(self.report.reported_overall[method],
                                   value, delta=1e-4)

    def test_published_deltas(self):
        """Test the deltas of the shipped table."""
        ours_biomedparse = self.report.comparison("Ours", "BiomedParse")
        ours_loose = self.report.comparison("Ours", "MedSAM (loose)")

        self.assertAlmostEqual(ours_biomedparse.reported_delta, 0.3893,
                               delta=1e-4)
        self.assertAlmostEqual(ours_loose.reported_delta, 0.1879,
                               delta=1e-4)

    def test_recomputed_averages(self):
        """Test averages recomputed from the task rows."""
        self.assertEqual(len(self.report.tasks), 177)
        for method, value in RECOMPUTED.items():
            self.assertAlmostEqual(self.report.overall[method], value,
                                   delta=1e-4)

    def test_comparisons_are_significant(self):
        """Test that comparisons are significant."""
        comparison = self.report.comparison("Ours", "BiomedParse")

        self.assertGreater(comparison.t, 0)
        self.assertLess(comparison.p, 0.05)

    def test_text_table_shows_both_averages(self):
        """Test text table shows both averages."""
        text = render_table(self.report)

        self.assertIn("Average (recomputed)", text)
        self.assertIn("Average (reported)", text)
        self.assertIn("70.86", text)
        self.assertIn("Ours - BiomedParse: ", text)


class ReportFilesTests(SimpleTestCase):
    """Test write_report and the records round trip."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_writes_three_files(self):
        """Test the report writes three files."""
        report = aggregate_report({
            "a": records(("liver", "s", 0.5), ("kidney", "s", 0.25)),
            "b": records(("liver", "s", 0.75), ("kidney", "s", 0.5)),
        })

        report_csv, summary_csv, report_txt = write_report(report,
                                                           self.tmp.name)

        table = pd.read_csv(report_csv)
        self.assertEqual(list(table.columns), ["method", "task", "mean_dsc"])
        self.assertEqual(len(table), 6)
        average = table[(table.method == "b") & (table.task == "Average")]
        self.assertAlmostEqual(float(average.mean_dsc.iloc[0]), 0.625)
        summary = pd.read_csv(summary_csv)
        self.assertAlmostEqual(float(summary.delta.iloc[0]), -0.25)
        self.assertTrue(os.path.exists(report_txt))

    def test_records_round_trip(self):
        """Test records survive a write and a read."""
        methods = {"model (text)": records(("disk", "scan_0001_s00", 0.5))}
        path = os.path.join(self.tmp.name, "records.csv")

        write_records(methods, path)

        self.assertEqual(read_records(path), methods)


class ReportCommandTests(SimpleTestCase):
    """Test the report command."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_shipped_table(self):
        """Test the shipped reference table loads."""
        stdout = StringIO()

        call_command("report", "--fixture", "--out", self.tmp.name,
                     "--quiet", stdout=stdout)

        output = stdout.getvalue()
        self.assertIn("Ours: overall 63.33 (reported 70.86)", output)
        self.assertIn("BiomedParse: overall 12.00 (reported 31.93)", output)
        self.assertIn("(reported 52.07)", output)
        self.assertIn("(reported 68.59)", output)
        for name in ("report.csv", "summary.csv", "report.txt"):
            self.assertTrue(os.path.exists(os.path.join(self.tmp.name,
                                                        name)))

    def test_records_files(self):
        """Test the report command reads records files."""
        path = os.path.join(self.tmp.name, "records.csv")
        write_records({"m": records(("disk", "s0", 0.5),
                                    ("ring", "s1", 1.0))}, path)
        stdout = StringIO()

        call_command("report", "--records", path, "--out", self.tmp.name,
                     stdout=stdout)

        self.assertIn("m: overall 75.00", stdout.getvalue())

    def test_missing_records_exit_code(self):
        """Test a missing records file exits with code 3."""
        with self.assertRaises(CommandError) as raised:
            call_command("report", "--records",
                         os.path.join(self.tmp.name, "none.csv"),
                         stdout=StringIO())

        self.assertEqual(raised.exception.returncode, 3)
