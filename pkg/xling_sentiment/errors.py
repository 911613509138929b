"""Exception hierarchy shared by every component."""


class XlingSentimentError(Exception):
    """Base error. ``module`` names the component that raised it."""

    module = "xling_sentiment"

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmbeddingFormatError(XlingSentimentError):
    module = "embedding_store"


class RetrievalError(XlingSentimentError):
    module = "embedding_store"


class DataFormatError(XlingSentimentError):
    module = "data_ingest"


class SamplingError(XlingSentimentError):
    module = "data_ingest"


class AlignmentError(XlingSentimentError):
    module = "alignment"


class ModelError(XlingSentimentError):
    module = "models"


class MetricError(XlingSentimentError):
    module = "metrics"


class PipelineError(XlingSentimentError):
    module = "pipelines"


class LeakageError(PipelineError):
    """A token appears on both sides of a train/test split."""


class ConfigError(XlingSentimentError):
    module = "config"
