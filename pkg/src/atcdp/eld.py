"""English-language scoring of recognizer output.

The reference scorer measures how much of the best-path confidence mass
falls on in-vocabulary words. Any object with a ``score(net)`` method can
stand in for it, e.g. :class:`ExternalScores` holding scores computed
elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol

from atcdp.errors import InvalidInputError, ParseError
from atcdp.formats.cnet import EPSILON, ConfusionNetwork
from atcdp.lexicon import Lexicon


@dataclass(frozen=True)
class EnglishScore:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"english score {self.value} outside [0, 1]")

    def __float__(self):
        return float(self.value)


class EnglishScorer(Protocol):
    def score(self, net: ConfusionNetwork) -> EnglishScore: ...


def english_score(net: ConfusionNetwork, lex: Lexicon) -> EnglishScore:
    """Confidence-weighted share of best words that are in the lexicon."""
    if not net.bins:
        raise InvalidInputError(f"confusion network {net.wav_id} has no bins")
    num = 0.0
    den = 0.0
    for b in net.bins:
        best = b.best
        if best.word == EPSILON:
            continue
        den += best.conf
        if best.word in lex:
            num += best.conf
    if den == 0:
        return EnglishScore(0.0)
    return EnglishScore(min(1.0, num / den))


class LexicalScorer:
    def __init__(self, lex: Lexicon):
        self.lex = lex

    def score(self, net: ConfusionNetwork) -> EnglishScore:
        return english_score(net, self.lex)


class ExternalScores:
    """Scores looked up by ``wav_id``; falls back to another scorer if given."""

    def __init__(self, scores: Mapping[str, float], fallback: EnglishScorer | None = None):
        self.scores = {k: EnglishScore(float(v)) for k, v in scores.items()}
        self.fallback = fallback

    def __contains__(self, wav_id):
        return wav_id in self.scores

    def get(self, wav_id: str) -> EnglishScore | None:
        return self.scores.get(wav_id)

    def score(self, net: ConfusionNetwork) -> EnglishScore:
        if net.wav_id in self.scores:
            return self.scores[net.wav_id]
        if self.fallback is None:
            raise InvalidInputError(f"no external english score for {net.wav_id}")
        return self.fallback.score(net)


def read_scores(path) -> dict[str, float]:
    """Read ``wav_id<TAB>score`` lines."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected wav_id<TAB>score", line_no)
            try:
                value = float(parts[1])
            except ValueError:
                raise ParseError(f"non-numeric score {parts[1]!r}", line_no) from None
            if not 0 <= value <= 1:
                raise ParseError(f"score {value} outside [0, 1]", line_no)
            out[parts[0]] = value
    return out
