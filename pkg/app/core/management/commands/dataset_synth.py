"""
Django command to synthesize and split a toy dataset
"""
import os

from core.commands import PipelineCommand
from core.io import write_manifest
from core.models import SPLITS
from core.splitting import grouped_split
from core.synthesis import SHAPE_CLASSES, synth_toy_dataset


class Command(PipelineCommand):
    """Generate toy scans, split them by scan and write the manifest."""
    help = "Synthesize a toy shape dataset and split it at scan level."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--scans", type=int, default=20,
                            help="number of scans to generate")
        parser.add_argument("--classes", nargs="+", default=["disk", "ring"],
                            choices=SHAPE_CLASSES,
                            help="shape classes, cycled across scans")
        parser.add_argument("--image-size", type=int,
                            help="slice size; defaults to model.image_size")
        parser.add_argument("--slices", type=int, default=4,
                            help="slices per scan")
        parser.add_argument("--modality", default="CT")
        parser.add_argument("--ratios", type=float, nargs=3,
                            default=[0.8, 0.1, 0.1],
                            metavar=("TRAIN", "TUNE", "VALIDATION"))
        parser.add_argument("--out", help="output directory")

    def run(self, config, **options):
        if options["scans"] < 1:
            raise self.usage_error("--scans must be at least 1")
        if options["slices"] < 1:
            raise self.usage_error("--slices must be at least 1")
        image_size = options["image_size"] or config["model"]["image_size"]
        out_dir = options["out"] or os.path.join(
            config["paths"]["work_dir"], "dataset"
        )
        seed = config["seed"]

        manifest = synth_toy_dataset(
            options["scans"], options["classes"], image_size, seed,
            slices_per_scan=options["slices"],
            modality=options["modality"],
            out_dir=out_dir,
        )
        manifest = grouped_split(manifest, tuple(options["ratios"]), seed)
        path = write_manifest(manifest,
                              os.path.join(out_dir, "manifest.jsonl"))

        scans = {split: len(manifest.scan_ids(split)) for split in SPLITS}
        slices = manifest.counts
        self.stdout.write(
            "scans per split: " + "/".join(str(scans[s]) for s in SPLITS)
        )
        self.stdout.write(
            "slices per split: " + "/".join(str(slices[s]) for s in SPLITS)
        )
        self.stdout.write(self.style.SUCCESS(f"Manifest written to {path}"))
