"""Multi-label topic classification over the revised 17-topic IPTC taxonomy."""

from __future__ import annotations

from pathlib import Path

from .base import DependencyError, composite_text, require_upstream
from .linear import MultiLabelModel, word_vector

TOPIC_LABELS = (
    "SPORT",
    "HOBBY AND PERSONAL INTEREST",
    "POLITICS",
    "CRIME, LAW AND JUSTICE",
    "ECONOMY, BUSINESS AND FINANCE",
    "DISASTER, ACCIDENT AND EMERGENCY INCIDENT",
    "HEALTH",
    "ARTS, CULTURE, ENTERTAINMENT AND MEDIA",
    "CONFLICTS, WAR AND PEACE",
    "SCIENCE AND TECHNOLOGY",
    "ENVIRONMENT",
    "EDUCATION",
    "WEATHER",
    "RELIGION",
    "LIFESTYLE AND LEISURE",
    "LABOUR",
    "SOCIETY",
)

THRESHOLD = 0.5


class TopicsAnalyzer:
    name = "topics"
    depends_on = ("core",)

    def __init__(self, model: MultiLabelModel | str | Path | None = None, threshold: float = THRESHOLD):
        if isinstance(model, (str, Path)):
            model = MultiLabelModel.load(model)
        if model is not None:
            unknown = set(model.labels) - set(TOPIC_LABELS)
            if unknown:
                raise ValueError(f"model labels outside the topic taxonomy: {sorted(unknown)}")
        self.model = model
        self.threshold = threshold

    def analyze(self, article, upstream) -> dict:
        require_upstream(upstream, self.name, "core")
        if self.model is None:
            raise DependencyError("topics requires a trained classifier artifact")
        vector = word_vector(composite_text(article), self.model.dim)
        labels = self.model.predict(vector, self.threshold)
        return {"labels": [l for l in TOPIC_LABELS if l in labels]}
