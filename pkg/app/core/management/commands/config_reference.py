"""
Django command to write the command and configuration reference page
"""
import os

from core.commands import PipelineCommand
from core.reference import render_reference


class Command(PipelineCommand):
    """Regenerate the Markdown reference from the live parsers."""
    help = "Write the Markdown reference of every command and config key."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--out", help="output Markdown file")

    def run(self, config, **options):
        out = options["out"] or os.path.join(config["paths"]["work_dir"],
                                             "REFERENCE.md")
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        with open(out, "w", encoding="utf-8") as writer:
            writer.write(render_reference())
        self.stdout.write(self.style.SUCCESS(f"Reference written to {out}"))
