"""
Django command to register an unseen class or segment with it
"""
import os

from core.commands import PipelineCommand
from core.io import load_image, load_pair, save_mask_png
from otfa.adaptation import (
    PRIOR_MODES,
    AdaptOptions,
    adapted_segment,
    load_memory,
    register,
    save_memory,
)
from segmenter.checkpoint import load_checkpoint


class Command(PipelineCommand):
    """``adapt register`` stores an exemplar; ``adapt segment`` uses it."""
    help = "One-shot training-free adaptation: register or segment."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("action", choices=["register", "segment"])
        parser.add_argument("--checkpoint",
                            help="checkpoint archive; defaults to best.ckpt")
        parser.add_argument("--image", required=True,
                            help="exemplar (register) or query (segment)")
        parser.add_argument("--mask", help="exemplar label PNG (register)")
        parser.add_argument("--class", dest="class_name",
                            help="class to register")
        parser.add_argument("--label", type=int, default=1,
                            help="mask label holding the class (register)")
        parser.add_argument("--modality", default="CT")
        parser.add_argument("--memory",
                            help="adapter memory archive to write or read")
        parser.add_argument("--out", help="output mask PNG (segment)")
        parser.add_argument("--scale-logits", action="store_true",
                            help="divide attention logits by sqrt(C_v)")
        parser.add_argument("--foreground-keys-only", action="store_true",
                            help="attend to foreground cells only")
        parser.add_argument("--prior-mode", choices=PRIOR_MODES,
                            default="multiplicative")

    def run(self, config, **options):
        work_dir = config["paths"]["work_dir"]
        checkpoint = options["checkpoint"] or os.path.join(
            work_dir, "checkpoints", "best.ckpt"
        )
        if options["action"] == "register":
            self.register(checkpoint, work_dir, options)
        else:
            self.segment(checkpoint, work_dir, options)

    def register(self, checkpoint, work_dir, options):
        if not options["mask"] or not options["class_name"]:
            raise self.usage_error("register needs --mask and --class")
        model, _ = load_checkpoint(checkpoint)
        image, mask = load_pair(
            options["image"], options["mask"],
            categories={options["label"]: options["class_name"]},
            modality=options["modality"],
        )
        memory = register(model, image, mask, options["class_name"])
        path = options["memory"] or os.path.join(
            work_dir, "otfa", f"{options['class_name']}.mem"
        )
        save_memory(memory, path)
        self.stdout.write(
            f"registered {memory.class_name}: "
            f"{int(memory.cell_mask.sum())} foreground cells, "
            f"center ({memory.center[0]:.2f}, {memory.center[1]:.2f})"
        )
        self.stdout.write(self.style.SUCCESS(f"Memory written to {path}"))

    def segment(self, checkpoint, work_dir, options):
        if not options["memory"]:
            raise self.usage_error("segment needs --memory")
        memory = load_memory(options["memory"])
        model, _ = load_checkpoint(checkpoint)
        image = load_image(options["image"], modality=options["modality"])
        adapt = AdaptOptions(
            scale_logits=options["scale_logits"],
            foreground_keys_only=options["foreground_keys_only"],
            prior_mode=options["prior_mode"],
        )
        result = adapted_segment(model, image, memory, options["modality"],
                                 adapt)
        out = options["out"] or os.path.join(
            work_dir, "otfa", f"{image.sample_id}_{memory.class_name}.png"
        )
        save_mask_png(result.mask, out)
        self.stdout.write(result.text)
        self.stdout.write(self.style.SUCCESS(f"Mask written to {out}"))
