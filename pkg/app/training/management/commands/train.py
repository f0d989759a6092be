"""
Django command to train the segmenter on CRD triplets
"""
import os

from core.commands import PipelineCommand
from segmenter.config import ModelConfig
from training.loop import TrainConfig, train_loop


class Command(PipelineCommand):
    """Train and write best.ckpt, last.ckpt and the loss curve."""
    help = "Train the segmentation model on a triplets JSONL file."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--triplets",
                            help="triplets JSONL; defaults to the work dir")
        parser.add_argument("--out", help="checkpoint directory")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--learning-rate", type=float)
        parser.add_argument("--lora-rank", type=int,
                            help="adapter rank; 0 trains the LM fully")

    def config_overrides(self, options):
        train = {
            key: options[key]
            for key in ("epochs", "batch_size", "learning_rate", "lora_rank")
            if options.get(key) is not None
        }
        return {"train": train} if train else {}

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        triplets = options["triplets"] or os.path.join(work_dir,
                                                       "triplets.jsonl")
        out_dir = options["out"] or os.path.join(work_dir, "checkpoints")

        result = train_loop(
            triplets,
            ModelConfig.from_run_config(config),
            TrainConfig.from_run_config(config),
            out_dir,
        )

        final = result.losses[-1]
        self.stdout.write(f"steps: {len(result.losses)}")
        self.stdout.write(f"final loss: {final.total:.4f}")
        self.stdout.write(f"loss curve: {result.loss_curve_path}")
        self.stdout.write(self.style.SUCCESS(
            f"Best checkpoint written to {result.best_path}"
        ))
