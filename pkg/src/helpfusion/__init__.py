"""Late fusion of per-event assistance detectors with sliding-window features."""

__version__ = "0.1.0"

DETECTOR_NAMES = ("m_gaze", "c_gaze", "lexical", "task")
