"""Clickbait detection core: overlap metrics, extractive summaries, prompt
templates and verbalizer scoring, backed by the C++ library."""

from ._core import (
    RenderedPrompt,
    RougeScore,
    TableScorer,
    Verbalizer,
    __version__,
    binary_metrics,
    cosine_similarity,
    detect,
    extractive_candidates,
    render_template,
    rouge_l,
    rouge_n,
    template_ids,
    template_pattern,
    tokenize,
    weighted_metrics,
)

__all__ = [
    "RenderedPrompt",
    "RougeScore",
    "TableScorer",
    "Verbalizer",
    "__version__",
    "binary_metrics",
    "cosine_similarity",
    "detect",
    "extractive_candidates",
    "render_template",
    "rouge_l",
    "rouge_n",
    "template_ids",
    "template_pattern",
    "tokenize",
    "weighted_metrics",
]
