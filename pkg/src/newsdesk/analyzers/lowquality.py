"""Low-quality article detection: hide what is not worth reading.

Under 50 tokens (title + body, punctuation included) an article is hidden
outright without consulting the classifier; at 50 or more the trained
detector decides.
"""

from __future__ import annotations

from pathlib import Path

from .base import DependencyError, composite_text, require_upstream
from .linear import BinaryModel, char_trigram_vector

TOKEN_GATE = 50

TOO_SHORT = "too_short"
CLASSIFIER = "classifier"
NONE = "none"


class LowQualityAnalyzer:
    name = "low_quality"
    depends_on = ("core",)

    def __init__(self, model: BinaryModel | str | Path | None = None):
        if isinstance(model, (str, Path)):
            model = BinaryModel.load(model)
        self.model = model

    def analyze(self, article, upstream) -> dict:
        core = require_upstream(upstream, self.name, "core")
        token_count = core["token_count"]
        if token_count < TOKEN_GATE:
            return {"hidden": True, "reason": TOO_SHORT}
        if self.model is None:
            raise DependencyError("low_quality requires a trained classifier artifact")
        vector = char_trigram_vector(composite_text(article), self.model.dim)
        flagged = self.model.predict(vector)
        return {"hidden": flagged, "reason": CLASSIFIER if flagged else NONE}
