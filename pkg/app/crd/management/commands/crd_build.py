"""
Django command to build CRD triplets from a split manifest
"""
import os

from core.commands import PipelineCommand
from core.io import read_manifest
from crd.describer import DescriberThresholds
from crd.palette import default_palette
from crd.pipeline import DETERMINISTIC, build_triplets
from crd.remote import RemoteDescriberConfig


class Command(PipelineCommand):
    """Colorize every mask, describe it and write triplets."""
    help = "Build image-mask-description triplets with the CRD strategy."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--manifest",
                            help="split manifest; defaults to the work dir")
        parser.add_argument("--out", help="triplets JSONL output path")
        parser.add_argument("--errors", help="per-record error log path")
        parser.add_argument("--vlm-endpoint",
                            help="remote describer URL; enables remote mode")

    def config_overrides(self, options):
        if options.get("vlm_endpoint"):
            return {"describer": {"endpoint": options["vlm_endpoint"]}}
        return {}

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        manifest = read_manifest(options["manifest"] or os.path.join(
            work_dir, "dataset", "manifest.jsonl"
        ))
        out = options["out"] or os.path.join(work_dir, "triplets.jsonl")

        described = config["describer"]
        palette = default_palette(
            colors=config["palette"]["colors"] or None,
            background=config["palette"]["background"],
        )
        thresholds = DescriberThresholds(
            described["blocky_compactness"], described["elongated_ratio"]
        )
        describer = DETERMINISTIC
        if described["endpoint"]:
            describer = RemoteDescriberConfig(
                endpoint=described["endpoint"],
                timeout=described["timeout"],
                retries=described["retries"],
                prompt=described["prompt"],
                max_in_flight=described["max_in_flight"],
            )

        result = build_triplets(
            manifest, out, palette=palette, describer=describer,
            error_log_path=options["errors"], thresholds=thresholds,
        )
        self.stdout.write(f"triplets written: {result.written}")
        if result.errors:
            self.stdout.write(self.style.WARNING(
                f"{result.errors} records failed; see {result.error_log}"
            ))
        if result.fallbacks:
            self.stdout.write(self.style.WARNING(
                f"{result.fallbacks} descriptions fell back to the "
                f"deterministic describer"
            ))
        self.stdout.write(self.style.SUCCESS(f"Triplets in {result.path}"))
