"""
Remote vision-language describer client with deterministic fallback.
"""
import base64
import io
import json
import logging
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import NamedTuple

from PIL import Image

from crd.describer import describe_regions
from crd.serializers import (
    DescribeRequestSerializer,
    DescribeResponseSerializer,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RemoteDescriberConfig:
    endpoint: str
    timeout: float = 10.0
    retries: int = 2
    prompt: str = (
        "Describe the shape and relative position of every colored "
        "region in this image."
    )
    max_in_flight: int = 4

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")


class DescribeResult(NamedTuple):
    text: str
    provenance: str


class MalformedResponse(Exception):
    """The describer answered, but not with {"text": <non-empty string>}."""


def encode_png_b64(rgb):
    buffer = io.BytesIO()
    Image.fromarray(rgb, "RGB").save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def request_description(colored, config):
    """One POST to the describer; returns its text verbatim."""
    payload = DescribeRequestSerializer(data={
        "image_b64": encode_png_b64(colored),
        "prompt": config.prompt,
    })
    payload.is_valid(raise_exception=True)
    request = urllib.request.Request(
        config.endpoint,
        data=json.dumps(payload.validated_data).encode("utf-8"),
        headers={"Content-Type": "application/json; charset=utf-8"},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=config.timeout) as response:
        if not 200 <= response.status < 300:
            raise MalformedResponse(f"status {response.status}")
        body = response.read()
    try:
        data = json.loads(body.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedResponse("body is not UTF-8") from exc
    except ValueError as exc:
        raise MalformedResponse("body is not JSON") from exc
    if not isinstance(data, dict):
        raise MalformedResponse("body is not a JSON object")
    serializer = DescribeResponseSerializer(data=data)
    if not serializer.is_valid():
        raise MalformedResponse(f"bad body: {serializer.errors}")
    return serializer.validated_data["text"]


def remote_describe(colored, config, mask, palette=None, thresholds=None):
    """Ask the remote describer, retrying; fall back to the local describer.

    ``mask`` is the label mask behind ``colored``; it feeds the fallback.
    """
    attempts = config.retries + 1
    for attempt in range(1, attempts + 1):
        try:
            text = request_description(colored, config)
            return DescribeResult(text, "remote")
        except (urllib.error.URLError, socket.timeout, TimeoutError,
                ConnectionError, MalformedResponse) as exc:
            logger.warning(
                "describer %s attempt %d/%d failed: %s",
                config.endpoint, attempt, attempts, exc,
            )
    logger.warning("describer %s exhausted; using fallback description",
                   config.endpoint)
    text, _ = describe_regions(mask, palette, thresholds)
    return DescribeResult(text, "fallback")
