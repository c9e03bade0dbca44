"""Tennis rally analytics from per-frame detections.

Pipeline: ingest -> court calibration -> tracking -> shot events -> metrics.
``synth`` renders scripted rallies with exact ground truth.
"""

__version__ = "0.1.0"

from .errors import CourtMetricsError  # noqa: E402
from .pipeline import PipelineConfig, analyze  # noqa: E402

__all__ = ["CourtMetricsError", "PipelineConfig", "analyze", "__version__"]
