"""
Word-level tokenizer over the template vocabulary.
"""
import logging
import os
import re

from core.exceptions import DataError, MissingArtifactError


logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
EOS_TOKEN = "</s>"
SEG_TOKEN = "[SEG]"
IMAGE_TOKEN = "<image>"
PHRASE_OPEN = "<p>"
PHRASE_CLOSE = "</p>"

SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, EOS_TOKEN, SEG_TOKEN, IMAGE_TOKEN,
                  PHRASE_OPEN, PHRASE_CLOSE)

TOKEN_PATTERN = re.compile(r"<[^>\s]+>|\[SEG\]|\w+(?:[-']\w+)*|[^\w\s]")
# no space before these when detokenizing
CLOSING_PUNCTUATION = set(".,?!:;")


def split_words(text):
    return TOKEN_PATTERN.findall(text)


class Tokenizer:
    """Maps words and special tokens to ids and back."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary holds duplicate tokens")
        missing = [t for t in SPECIAL_TOKENS if t not in tokens]
        if missing:
            raise DataError(f"vocabulary lacks special tokens {missing}")
        self.tokens = tokens
        self.ids = {token: i for i, token in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token):
        return self.ids[token]

    @property
    def pad_id(self):
        return self.ids[PAD_TOKEN]

    @property
    def eos_id(self):
        return self.ids[EOS_TOKEN]

    @property
    def seg_id(self):
        return self.ids[SEG_TOKEN]

    @property
    def image_id(self):
        return self.ids[IMAGE_TOKEN]

    def encode(self, text):
        unk = self.ids[UNK_TOKEN]
        return [self.ids.get(word, unk) for word in split_words(text)]

    def decode(self, ids):
        """Join tokens up to the first end-of-sequence, dropping padding."""
        words = []
        for i in ids:
            if i == self.eos_id:
                break
            if i == self.pad_id:
                continue
            words.append(self.tokens[i])
        text = ""
        for word in words:
            if text and word not in CLOSING_PUNCTUATION:
                text += " "
            text += word
        return text

    def save(self, path):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as writer:
            writer.write("\n".join(self.tokens) + "\n")

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise MissingArtifactError(f"vocabulary {path} does not exist")
        with open(path, encoding="utf-8") as reader:
            return cls([line.rstrip("\n") for line in reader if line.strip()])


def build_tokenizer(texts):
    """Specials first, then every other word of ``texts`` sorted."""
    words = set()
    for text in texts:
        words.update(split_words(text))
    words -= set(SPECIAL_TOKENS)
    tokenizer = Tokenizer(list(SPECIAL_TOKENS) + sorted(words))
    logger.info("vocabulary of %d tokens", len(tokenizer))
    return tokenizer
