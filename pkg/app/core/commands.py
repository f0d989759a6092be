"""
Shared base for the pipeline management commands.
"""
import logging

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from core.config import load_run_config
from core.exceptions import (
    DataError,
    MissingArtifactError,
    NumericError,
    SegmentationError,
    StageError,
)


logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_DATA_ERROR = 4
EXIT_NUMERIC_FAILURE = 5


def exit_code_for(exc):
    """Exit code and label for a pipeline failure; (None, None) if unmapped."""
    if isinstance(exc, StageError):
        return exit_code_for(exc.error)
    if isinstance(exc, MissingArtifactError):
        return EXIT_MISSING_ARTIFACT, "missing artifact"
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC_FAILURE, "numeric failure"
    if isinstance(exc, DataError):
        return EXIT_DATA_ERROR, "data error"
    if isinstance(exc, ValueError):
        return EXIT_USAGE, "invalid arguments"
    return None, None


class PipelineCommand(BaseCommand):
    """Command that loads the run config and maps failures to exit codes.

    Subclasses implement ``run(config, **options)`` and may override
    ``config_overrides(options)`` to turn flags into config keys.
    """

    def add_arguments(self, parser):
        parser.add_argument(
            "--config",
            help="JSON run configuration merged over the settings defaults",
        )
        parser.add_argument(
            "--seed", type=int,
            help="global seed; overrides the config value",
        )

    def config_overrides(self, options):
        return {}

    def handle(self, *args, **options):
        config_path = options.pop("config", None)
        overrides = self.config_overrides(options)
        if options.get("seed") is not None:
            overrides["seed"] = options["seed"]
        try:
            config = load_run_config(config_path, overrides)
        except ValidationError as exc:
            raise CommandError(
                f"invalid configuration: {exc.detail}", returncode=EXIT_USAGE
            )
        except (MissingArtifactError, ValueError) as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE)
        try:
            self.run(config, **options)
        except (SegmentationError, ValueError) as exc:
            code, label = exit_code_for(exc)
            if code is None:
                raise
            logger.error("%s: %s", label, exc)
            raise CommandError(f"{label}: {exc}", returncode=code)

    def usage_error(self, message):
        return CommandError(message, returncode=EXIT_USAGE)

    def run(self, config, **options):
        raise NotImplementedError
