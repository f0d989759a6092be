"""
Tests for the conversation templates and the tokenizer
"""
import os
import tempfile

from django.test import SimpleTestCase

from core.exceptions import DataError
from segmenter.prompts import build_vocabulary, render_prompt
from segmenter.tokenizer import (
    IMAGE_TOKEN,
    SEG_TOKEN,
    SPECIAL_TOKENS,
    UNK_TOKEN,
    Tokenizer,
)


class RenderPromptTests(SimpleTestCase):

    def test_user_text_suffix(self):
        """Test the user text wraps the class request."""
        prompt = render_prompt("liver", "CT")

        self.assertTrue(prompt.user_text.endswith(
            "USER: Can you segment the liver in this CT image? ASSISTANT:"
        ))
        self.assertTrue(prompt.user_text.startswith(
            "A chat between a curious human and an artificial intelligence "
            "assistant."
        ))
        self.assertEqual(prompt.user_text.count(IMAGE_TOKEN), 1)

    def test_target_text(self):
        """Test the target reply names modality and class."""
        self.assertEqual(
            render_prompt("liver", "CT").target_text,
            "This is a <p> CT </p> image. "
            "The image contains <p> liver </p> [SEG].",
        )

    def test_empty_arguments_raise(self):
        """Test that empty arguments raise."""
        with self.assertRaises(ValueError):
            render_prompt("", "CT")
        with self.assertRaises(ValueError):
            render_prompt("liver", " ")


class TokenizerTests(SimpleTestCase):
    """Test the word-level tokenizer."""

    def setUp(self):
        self.tokenizer = build_vocabulary(["liver", "left kidney"],
                                          ["CT", "X-Ray"])

    def test_specials_lead_the_vocabulary(self):
        """Test specials lead the vocabulary."""
        self.assertEqual(self.tokenizer.tokens[:len(SPECIAL_TOKENS)],
                         list(SPECIAL_TOKENS))
        self.assertEqual(len(set(self.tokenizer.tokens)),
                         len(self.tokenizer))

    def test_target_round_trips(self):
        """Test that target round trips."""
        for class_name, modality in [("liver", "CT"),
                                     ("left kidney", "X-Ray")]:
            target = render_prompt(class_name, modality).target_text
            ids = self.tokenizer.encode(target)

            self.assertIn(self.tokenizer.seg_id, ids)
            self.assertEqual(self.tokenizer.decode(ids), target)

    def test_user_text_round_trips(self):
        """Test that user text round trips."""
        user_text = render_prompt("liver", "CT").user_text

        self.assertEqual(
            self.tokenizer.decode(self.tokenizer.encode(user_text)),
            user_text,
        )

    def test_decode_stops_at_end_of_sequence(self):
        """Test decode stops at end of sequence."""
        ids = self.tokenizer.encode("liver [SEG]") + [
            self.tokenizer.eos_id] + self.tokenizer.encode("CT")

        self.assertEqual(self.tokenizer.decode(ids), f"liver {SEG_TOKEN}")

    def test_unknown_words_map_to_unk(self):
        """Test unknown words map to the unknown token."""
        ids = self.tokenizer.encode("spleen")

        self.assertEqual(ids, [self.tokenizer.id_of(UNK_TOKEN)])

    def test_missing_specials_are_rejected(self):
        """Test that missing specials are rejected."""
        with self.assertRaises(DataError):
            Tokenizer(["<pad>", "liver"])

    def test_vocabulary_file_round_trips(self):
        """Test that vocabulary file round trips."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "vocab.txt")
            self.tokenizer.save(path)

            self.assertEqual(Tokenizer.load(path).tokens,
                             self.tokenizer.tokens)
