"""
Django command to evaluate a checkpoint on one split
"""
import os

from core.commands import PipelineCommand
from core.models import SPLITS
from evaluation.reports import aggregate_report, write_records, write_report
from evaluation.runner import evaluate_split
from segmenter.checkpoint import load_checkpoint


class Command(PipelineCommand):
    """Score the model and the prompt-mode baselines, then report."""
    help = "Evaluate a checkpoint on a triplet split and write a report."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--checkpoint",
                            help="checkpoint archive; defaults to best.ckpt")
        parser.add_argument("--triplets",
                            help="triplets JSONL; defaults to the work dir")
        parser.add_argument("--split", choices=SPLITS, default="validation")
        parser.add_argument("--prompt-modes", nargs="*",
                            choices=["none", "point", "tight_box",
                                     "loose_box"],
                            help="baseline prompt modes; defaults to config")
        parser.add_argument("--out", help="report directory")

    def config_overrides(self, options):
        if options.get("prompt_modes") is None:
            return {}
        return {"eval": {"prompt_modes": options["prompt_modes"]}}

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        checkpoint = options["checkpoint"] or os.path.join(
            work_dir, "checkpoints", "best.ckpt"
        )
        triplets = options["triplets"] or os.path.join(work_dir,
                                                       "triplets.jsonl")
        out_dir = options["out"] or os.path.join(work_dir, "eval")
        settings = config["eval"]

        model, _ = load_checkpoint(checkpoint)
        methods = evaluate_split(
            model, triplets, options["split"],
            prompt_modes=settings["prompt_modes"],
            both_empty=settings["both_empty_dsc"],
            max_shift=settings["loose_box_shift"],
            seed=config["seed"],
        )
        records = write_records(methods, os.path.join(out_dir,
                                                      "records.csv"))
        report = aggregate_report(methods)
        write_report(report, out_dir)

        for name in report.methods:
            self.stdout.write(
                f"{name}: mean DSC {report.overall[name]:.4f}"
            )
        self.stdout.write(f"records: {records}")
        self.stdout.write(self.style.SUCCESS(f"Report written to {out_dir}"))
