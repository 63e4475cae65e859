"""Exception types shared across the toolkit."""


class DataError(ValueError):
    """Input data violates a documented contract (bad file, infeasible plan, ...)."""


class EmbeddingFormatError(DataError):
    """Malformed word-vector text file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class VocabularyError(DataError):
    """Empty or inconsistent vocabulary."""


class SamplingError(DataError):
    """Infeasible downsampling plan."""


class TrainingError(DataError):
    """Corpus unusable for training."""


class RegressionError(DataError):
    """Degenerate regression problem."""
