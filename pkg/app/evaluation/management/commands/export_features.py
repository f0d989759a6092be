"""
Django command to export last-layer image encoder features
"""
import os

from core.commands import PipelineCommand
from core.io import load_image
from crd.pipeline import load_triplet, read_triplets
from evaluation.runner import export_features
from segmenter.checkpoint import load_checkpoint


class Command(PipelineCommand):
    """One mean-pooled feature row per image, written as CSV."""
    help = "Export mean-pooled image encoder features to features.csv."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--checkpoint",
                            help="checkpoint archive; defaults to best.ckpt")
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--images", nargs="+", help="grayscale PNGs")
        source.add_argument("--triplets", help="triplets JSONL")
        parser.add_argument("--split",
                            help="only triplets of this split")
        parser.add_argument("--modality", default="CT")
        parser.add_argument("--out", help="output CSV")

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        checkpoint = options["checkpoint"] or os.path.join(
            work_dir, "checkpoints", "best.ckpt"
        )
        model, _ = load_checkpoint(checkpoint)
        if options["images"]:
            images = [load_image(path, modality=options["modality"])
                      for path in options["images"]]
        else:
            root = os.path.dirname(os.path.abspath(options["triplets"]))
            images = [
                load_triplet(root, triplet)[0]
                for triplet in read_triplets(options["triplets"])
                if options["split"] in (None, triplet.split)
            ]
        out = options["out"] or os.path.join(work_dir, "features.csv")

        frame = export_features(model, images, out)

        self.stdout.write(f"rows: {len(frame)}")
        self.stdout.write(self.style.SUCCESS(f"Features written to {out}"))
