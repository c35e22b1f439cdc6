"""Python bindings for the minimt SMT/NMT workbench."""

import json

from ._minimt import (
    LanguageModel,
    MinimtError,
    Translator,
    __version__,
    classify_rule,
    mine_rules,
    run_cli,
    sha256_hex,
    split_chars,
    tokenize,
)
from . import _minimt


def bleu(refs, hyps, max_n=4):
    """Corpus BLEU report for parallel lists of whitespace-tokenized lines."""
    return json.loads(_minimt.bleu_json(list(refs), list(hyps), max_n))


def ter(refs, hyps):
    return json.loads(_minimt.ter_json(list(refs), list(hyps)))


def classification_stats(predicted_rows, positive="Other"):
    # rows are predicted labels, columns gold labels, both ordered (Other, Simple)
    return json.loads(_minimt.classification_stats_json(predicted_rows, positive))


__all__ = [
    "LanguageModel",
    "MinimtError",
    "Translator",
    "__version__",
    "bleu",
    "classification_stats",
    "classify_rule",
    "mine_rules",
    "run_cli",
    "sha256_hex",
    "split_chars",
    "ter",
    "tokenize",
]
