"""Desk-scale analyzer implementations behind one uniform contract.

Every analyzer is a pure function of (article text, model artifact): same
input, same bytes out. Heavyweight language models can replace any of these
behind the same interface without touching the pipeline.
"""

from .base import Analyzer, DependencyError
from .core import CoreAnalyzer, Token
from .lowquality import LowQualityAnalyzer
from .ner import EntityMention, GazetteerNer
from .topics import TOPIC_LABELS, TopicsAnalyzer

__all__ = [
    "Analyzer",
    "DependencyError",
    "CoreAnalyzer",
    "Token",
    "GazetteerNer",
    "EntityMention",
    "LowQualityAnalyzer",
    "TopicsAnalyzer",
    "TOPIC_LABELS",
]
