"""
Django command to segment one image with a trained checkpoint
"""
import os

from core.commands import PipelineCommand
from core.io import load_image, save_mask_png
from segmenter.checkpoint import load_checkpoint


class Command(PipelineCommand):
    """Print the generated text and write the binary mask."""
    help = "Segment a class in one image and print the model's reply."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--checkpoint",
                            help="checkpoint archive; defaults to best.ckpt")
        parser.add_argument("--image", required=True,
                            help="grayscale PNG to segment")
        parser.add_argument("--class", dest="class_name", required=True,
                            help="category name to ask for")
        parser.add_argument("--modality", default="CT")
        parser.add_argument("--out", help="output mask PNG")

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        checkpoint = options["checkpoint"] or os.path.join(
            work_dir, "checkpoints", "best.ckpt"
        )
        model, _ = load_checkpoint(checkpoint)
        image = load_image(options["image"], modality=options["modality"])

        result = model.segment(image, options["class_name"],
                               options["modality"])

        out = options["out"] or os.path.join(
            work_dir, "infer", f"{image.sample_id}_mask.png"
        )
        save_mask_png(result.mask, out)
        self.stdout.write(result.text)
        self.stdout.write(
            f"foreground pixels: {int(result.mask.sum())}"
        )
        self.stdout.write(self.style.SUCCESS(f"Mask written to {out}"))
