"""Toolkit for building air-traffic-control speech corpora.

Signal gating, confusion-network and annotation formats, transcript
normalization, callsign grammar, tagging, language scoring, quality
ranking, evaluation metrics and a batch pipeline.
"""

from atcdp.errors import InvalidInputError, ParseError, ValidationError

__version__ = "0.1.0"

__all__ = ["InvalidInputError", "ParseError", "ValidationError", "__version__"]
