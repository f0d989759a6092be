"""
Django command to aggregate records or a published table into a report
"""
import os

from core.commands import PipelineCommand
from evaluation.reports import (
    FIXTURE_PATH,
    aggregate_report,
    load_table_fixture,
    read_records,
    render_table,
    write_report,
)


class Command(PipelineCommand):
    """Per-task means, overall means, deltas and paired t-tests."""
    help = ("Aggregate evaluation records, or the shipped held-out table, "
            "into report.csv, summary.csv and report.txt.")

    def add_arguments(self, parser):
        super().add_arguments(parser)
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--records", nargs="+",
                            help="records CSV files written by evaluate")
        source.add_argument("--fixture", nargs="?", const=FIXTURE_PATH,
                            help="task/method/dsc table in percent; "
                                 "without a path the shipped table")
        parser.add_argument("--out", help="report directory")
        parser.add_argument("--quiet", action="store_true",
                            help="print overall means only")

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        if options["records"]:
            methods = {}
            for path in options["records"]:
                for name, records in read_records(path).items():
                    methods.setdefault(name, []).extend(records)
        elif options["fixture"]:
            methods = load_table_fixture(options["fixture"])
        else:
            methods = read_records(os.path.join(work_dir, "eval",
                                                 "records.csv"))
        out_dir = options["out"] or os.path.join(work_dir, "report")

        report = aggregate_report(methods)
        write_report(report, out_dir)

        if not options["quiet"]:
            self.stdout.write(render_table(report))
        for name in report.methods:
            line = f"{name}: overall {100 * report.overall[name]:.2f}"
            if name in report.reported_overall:
                line += (f" (reported "
                         f"{100 * report.reported_overall[name]:.2f})")
            self.stdout.write(line)
        self.stdout.write(self.style.SUCCESS(f"Report written to {out_dir}"))
