"""
Django command to measure adaptation on a held-out toy class
"""
import os

from core.commands import PipelineCommand
from core.synthesis import SHAPE_CLASSES
from otfa.adaptation import PRIOR_MODES, AdaptOptions
from otfa.experiment import (
    EXEMPLAR_MODES, compare_on_held_out, train_on_seen,
)
from segmenter.checkpoint import load_checkpoint
from segmenter.config import ModelConfig
from training.loop import TrainConfig


class Command(PipelineCommand):
    """Train on seen classes, then compare adapted and unadapted DSC."""
    help = ("Compare adapted and unadapted segmentation of a shape class "
            "the model was not trained on.")

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--seen", nargs="+", default=["disk", "ring"],
                            choices=SHAPE_CLASSES)
        parser.add_argument("--held-out", default="crescent",
                            choices=SHAPE_CLASSES)
        parser.add_argument("--checkpoint",
                            help="model trained on the seen classes; "
                                 "trains one when omitted")
        parser.add_argument("--scans", type=int, default=20,
                            help="seen-class scans to train on")
        parser.add_argument("--slices", type=int, default=4)
        parser.add_argument("--queries", type=int, default=20,
                            help="held-out query slices")
        parser.add_argument("--modality", default="CT")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--out", help="output directory")
        parser.add_argument("--scale-logits", action="store_true")
        parser.add_argument("--foreground-keys-only", action="store_true")
        parser.add_argument("--prior-mode", choices=PRIOR_MODES,
                            default="multiplicative")
        parser.add_argument("--exemplar", choices=EXEMPLAR_MODES,
                            default="scan",
                            help="register the first slice of each "
                                 "held-out scan, or a single slice for "
                                 "all queries")

    def config_overrides(self, options):
        if options.get("epochs") is None:
            return {}
        return {"train": {"epochs": options["epochs"]}}

    def run(self, config, **options):
        if options["held_out"] in options["seen"]:
            raise self.usage_error("--held-out must not be a seen class")
        if options["queries"] < 1 or options["scans"] < 3:
            raise self.usage_error("need --queries >= 1 and --scans >= 3")
        if options["exemplar"] == "scan" and options["slices"] < 2:
            raise self.usage_error("--exemplar scan needs --slices >= 2")
        out_dir = options["out"] or os.path.join(
            config["paths"]["work_dir"], "otfa_experiment"
        )

        if options["checkpoint"]:
            model, _ = load_checkpoint(options["checkpoint"])
        else:
            model = train_on_seen(
                out_dir, ModelConfig.from_run_config(config),
                TrainConfig.from_run_config(config), options["seen"],
                options["scans"], options["slices"], options["modality"],
            )

        result = compare_on_held_out(
            model, options["held_out"],
            os.path.join(out_dir, "otfa_experiment.csv"),
            n_queries=options["queries"],
            slices=options["slices"],
            modality=options["modality"],
            seed=config["seed"] + 1,
            exemplar=options["exemplar"],
            options=AdaptOptions(
                scale_logits=options["scale_logits"],
                foreground_keys_only=options["foreground_keys_only"],
                prior_mode=options["prior_mode"],
            ),
        )

        self.stdout.write(f"exemplars: {len(result.exemplar_ids)}")
        self.stdout.write(f"queries: {len(result.outcomes)}")
        self.stdout.write(f"unadapted mean DSC: {result.mean_unadapted:.4f}")
        self.stdout.write(f"adapted mean DSC: {result.mean_adapted:.4f}")
        self.stdout.write(
            self.style.SUCCESS(f"Per-query scores written to "
                               f"{result.csv_path}")
        )
