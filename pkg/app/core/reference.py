"""
Generated reference page for the commands and the run configuration.
"""
from django.conf import settings
from django.core.management import get_commands, load_command_class
from rest_framework import serializers

from core.config import RunConfigSerializer


PIPELINE_APPS = ("core", "crd", "segmenter", "otfa", "training",
                 "evaluation")


def pipeline_commands():
    """(name, app) of every command the pipeline apps define, sorted."""
    return sorted(
        (name, app) for name, app in get_commands().items()
        if app in PIPELINE_APPS
    )


def field_type(field):
    if isinstance(field, serializers.ListField):
        return f"list of {field_type(field.child)}"
    if isinstance(field, serializers.ChoiceField):
        return "one of " + ", ".join(sorted(map(str, field.choices)))
    return {
        serializers.IntegerField: "integer",
        serializers.FloatField: "number",
        serializers.CharField: "string",
    }.get(type(field), type(field).__name__)


def config_rows(serializer, defaults, prefix=""):
    """(key, type, default) for every leaf of the configuration schema."""
    rows = []
    for name, field in serializer.fields.items():
        key = f"{prefix}{name}"
        if isinstance(field, serializers.Serializer):
            rows.extend(config_rows(field, defaults.get(name, {}),
                                    key + "."))
        else:
            rows.append((key, field_type(field), defaults.get(name)))
    return rows


def render_reference():
    lines = ["# Command and configuration reference", ""]
    lines += [
        "Every command runs as `python manage.py <command>`. Flags are "
        "merged over the `--config` file, which is merged over the "
        "defaults below.",
        "",
        "## Exit codes",
        "",
        "| Code | Meaning |",
        "|------|---------|",
        "| 0 | success |",
        "| 2 | usage or configuration error |",
        "| 3 | missing artifact |",
        "| 4 | data error |",
        "| 5 | numeric failure |",
        "",
        "## Commands",
        "",
    ]
    for name, app in pipeline_commands():
        command = load_command_class(app, name)
        parser = command.create_parser("manage.py", name)
        lines += [f"### {name}", "", command.help, "", "```",
                  parser.format_help().rstrip(), "```", ""]
    lines += [
        "## Configuration keys",
        "",
        "| Key | Type | Default |",
        "|-----|------|---------|",
    ]
    for key, kind, default in config_rows(RunConfigSerializer(),
                                          settings.SEGMENTATION):
        lines.append(f"| `{key}` | {kind} | `{default!r}` |")
    return "\n".join(lines) + "\n"
