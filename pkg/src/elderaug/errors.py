"""Exception hierarchy shared across the workbench.

Exit-code mapping in the CLI: DataError -> 1, BackendError -> 2,
ConfigError -> 2.
"""


class ElderaugError(Exception):
    """Base class for all workbench errors."""


class DataError(ElderaugError):
    """Invalid manifest, record, or audio content."""


class ManifestError(DataError):
    """Manifest file could not be parsed or violates a hard invariant."""


class AudioFormatError(DataError):
    """A WAV or feature file is malformed or unsupported."""


class ConfigError(ElderaugError):
    """Run configuration file is missing, unparsable, or inconsistent."""


class BackendError(ElderaugError):
    """An LLM or TTS backend failed after all retries."""


class EctValidationError(BackendError):
    """Every paraphrase candidate for one utterance failed validation.

    Carries the last rejected candidate and the rules it broke so batch
    callers can report the offending source utterance.
    """

    def __init__(self, message: str, candidate: str, violations: list[str]):
        super().__init__(message)
        self.candidate = candidate
        self.violations = violations
