"""
Conversation templates for the segmentation dialogue.
"""
from typing import NamedTuple

from segmenter.tokenizer import IMAGE_TOKEN, build_tokenizer


SYSTEM_PROMPT = (
    "A chat between a curious human and an artificial intelligence "
    "assistant. The assistant gives helpful, detailed, and polite answers "
    "to the human's questions."
)
IMAGE_PREAMBLE = f"The {IMAGE_TOKEN} provides an overview of the image."
QUESTION = "Can you segment the {class_name} in this {modality} image?"
ANSWER = (
    "This is a <p> {modality} </p> image. "
    "The image contains <p> {class_name} </p> [SEG]."
)


class Prompt(NamedTuple):
    user_text: str
    target_text: str


def render_prompt(class_name, modality):
    """Fill the user turn and the expected assistant reply."""
    if not class_name or not class_name.strip():
        raise ValueError("class_name must be non-empty")
    if not modality or not modality.strip():
        raise ValueError("modality must be non-empty")
    user_text = (
        f"{SYSTEM_PROMPT} {IMAGE_PREAMBLE} USER: "
        f"{QUESTION.format(class_name=class_name, modality=modality)} "
        f"ASSISTANT:"
    )
    target_text = ANSWER.format(class_name=class_name, modality=modality)
    return Prompt(user_text, target_text)


def build_vocabulary(class_names, modalities):
    """Tokenizer covering every rendered prompt of the given names."""
    texts = []
    for class_name in class_names:
        for modality in modalities:
            texts.extend(render_prompt(class_name, modality))
    return build_tokenizer(texts)
