"""Exception hierarchy shared across the package.

Every error carries a short machine-parsable ``code``; the CLI prints it as
``code=<code>: <message>`` on stderr and maps input errors to exit status 1
and runtime failures to exit status 2.
"""

from __future__ import annotations


class AggrolabError(Exception):
    """Base class. ``code`` identifies the failure kind."""

    code = "error"
    exit_status = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InputError(AggrolabError):
    """User-facing validation problem (bad file, bad flag, bad config)."""

    code = "invalid_input"
    exit_status = 1


class DataFormatError(InputError):
    code = "data_format"


class UnknownLabelError(InputError):
    code = "unknown_label"


class ConfigError(InputError):
    code = "config"


class ResourceError(InputError):
    code = "resource"


class EmptyDocumentError(InputError):
    code = "empty_document"


class ShapeMismatchError(AggrolabError):
    code = "shape_mismatch"


class NotFittedError(AggrolabError):
    code = "not_fitted"


class BundleFormatError(InputError):
    code = "bundle_format"


class DivergenceError(AggrolabError):
    """Raised when training produces a non-finite loss."""

    code = "divergence"

    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(
            f"non-finite loss {value!r} at epoch {epoch}, batch {batch}"
        )
        self.epoch = epoch
        self.batch = batch
