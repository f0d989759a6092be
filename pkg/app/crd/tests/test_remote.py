"""
Tests for the remote describer client against a local stub server
"""
import numpy as np
from django.http import HttpResponse
from django.test import LiveServerTestCase, SimpleTestCase, override_settings
from django.urls import path
from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import APIView

from core.models import SegMask
from crd.describer import describe_regions
from crd.palette import colorize_mask, default_palette
from crd.remote import RemoteDescriberConfig, remote_describe
from crd.serializers import DescribeRequestSerializer


STUB_TEXT = "red blob upper left"


class EchoDescriberView(APIView):
    """Answers every valid request with a fixed description."""
    calls = 0

    def post(self, request):
        type(self).calls += 1
        serializer = DescribeRequestSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors,
                            status=status.HTTP_400_BAD_REQUEST)
        return Response({"text": STUB_TEXT})


class EmptyBodyView(APIView):
    calls = 0

    def post(self, request):
        type(self).calls += 1
        return HttpResponse(b"", status=200)


class InvalidUtf8View(APIView):
    calls = 0

    def post(self, request):
        type(self).calls += 1
        return HttpResponse(b'{"text": "\xff\xfe bad"}',
                            content_type="application/json", status=200)


class ServerErrorView(APIView):

    def post(self, request):
        return Response({"detail": "down"},
                        status=status.HTTP_503_SERVICE_UNAVAILABLE)


urlpatterns = [
    path("describe/", EchoDescriberView.as_view()),
    path("empty/", EmptyBodyView.as_view()),
    path("broken/", ServerErrorView.as_view()),
    path("latin/", InvalidUtf8View.as_view()),
]


def sample_mask():
    labels = np.zeros((16, 16), int)
    labels[1:5, 1:5] = 1
    return SegMask(labels, {1: "lesion"})


@override_settings(ROOT_URLCONF=__name__)
class RemoteDescribeTests(LiveServerTestCase):
    """Test remote_describe over HTTP."""

    def setUp(self):
        EchoDescriberView.calls = 0
        EmptyBodyView.calls = 0
        InvalidUtf8View.calls = 0
        self.mask = sample_mask()
        self.palette = default_palette()
        self.colored = colorize_mask(self.mask, self.palette)

    def config(self, route, retries=1):
        return RemoteDescriberConfig(
            endpoint=f"{self.live_server_url}/{route}/",
            timeout=5.0,
            retries=retries,
        )

    def test_returns_service_text_verbatim(self):
        """Test the service text comes back verbatim."""
        result = remote_describe(self.colored, self.config("describe"),
                                 self.mask, self.palette)

        self.assertEqual(result.text, STUB_TEXT)
        self.assertEqual(result.provenance, "remote")
        self.assertEqual(EchoDescriberView.calls, 1)

    def test_empty_body_is_retried_then_falls_back(self):
        """Test an empty body is retried, then falls back."""
        with self.assertLogs("crd.remote", level="WARNING"):
            result = remote_describe(self.colored,
                                     self.config("empty", retries=2),
                                     self.mask, self.palette)

        self.assertEqual(result.provenance, "fallback")
        self.assertEqual(result.text,
                         describe_regions(self.mask, self.palette)[0])
        self.assertEqual(EmptyBodyView.calls, 3)

    def test_invalid_utf8_body_is_retried_then_falls_back(self):
        """Test a body that is not UTF-8 counts as a failed attempt."""
        with self.assertLogs("crd.remote", level="WARNING") as logs:
            result = remote_describe(self.colored,
                                     self.config("latin", retries=1),
                                     self.mask, self.palette)

        self.assertEqual(result, (describe_regions(self.mask,
                                                   self.palette)[0],
                                  "fallback"))
        self.assertEqual(InvalidUtf8View.calls, 2)
        self.assertTrue(any("not UTF-8" in line for line in logs.output))

    def test_error_status_falls_back(self):
        """Test that error status falls back."""
        result = remote_describe(self.colored, self.config("broken"),
                                 self.mask, self.palette)

        self.assertEqual(result.provenance, "fallback")


class UnreachableDescriberTests(SimpleTestCase):

    def test_unreachable_endpoint_falls_back(self):
        """Test that unreachable endpoint falls back."""
        mask = sample_mask()
        palette = default_palette()
        config = RemoteDescriberConfig(endpoint="http://127.0.0.1:9/",
                                       timeout=2.0, retries=1)

        with self.assertLogs("crd.remote", level="WARNING") as logs:
            result = remote_describe(colorize_mask(mask, palette), config,
                                     mask, palette)

        self.assertEqual(result.provenance, "fallback")
        self.assertEqual(result.text, describe_regions(mask, palette)[0])
        self.assertEqual(
            sum("attempt" in line for line in logs.output), 2
        )

    def test_config_rejects_bad_values(self):
        """Test that config rejects bad values."""
        with self.assertRaises(ValueError):
            RemoteDescriberConfig(endpoint="http://x/", timeout=0)
        with self.assertRaises(ValueError):
            RemoteDescriberConfig(endpoint="http://x/", retries=-1)
