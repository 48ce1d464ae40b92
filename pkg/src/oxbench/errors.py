"""Exception hierarchy for the harness.

Each family subclasses a module-level base so callers can catch at the
granularity they need (everything / one subsystem / one condition).
"""

from __future__ import annotations


class OxbenchError(Exception):
    """Base class for all harness errors."""


# --- ingestion ---------------------------------------------------------------


class IngestError(OxbenchError):
    """Base class for ingestion failures."""


class ChecksumMismatch(IngestError):
    def __init__(self, offset: int, which: str = "data"):
        super().__init__(f"{which} checksum mismatch for record at offset {offset}")
        self.offset = offset
        self.which = which


class TruncatedRecord(IngestError):
    def __init__(self, offset: int):
        super().__init__(f"stream ends mid-record (record starts at offset {offset})")
        self.offset = offset


class MalformedProto(IngestError):
    def __init__(self, offset: int, detail: str):
        super().__init__(f"malformed feature message at offset {offset}: {detail}")
        self.offset = offset
        self.detail = detail


class MissingRequiredKey(IngestError):
    def __init__(self, key: str):
        super().__init__(f"required feature key missing: {key!r}")
        self.key = key


class ImageDecodeError(IngestError):
    def __init__(self, key: str, step_index: int, detail: str = ""):
        msg = f"cannot decode image feature {key!r} at step {step_index}"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.key = key
        self.step_index = step_index


class SchemaViolation(IngestError):
    def __init__(self, line_number: int, detail: str):
        super().__init__(f"line {line_number}: {detail}")
        self.line_number = line_number
        self.detail = detail


class NonFiniteValue(IngestError):
    def __init__(self, key: str, step_index: int):
        super().__init__(f"non-finite value in {key!r} at step {step_index}")
        self.key = key
        self.step_index = step_index


class InvalidFeatureKind(IngestError):
    def __init__(self, key: str, detail: str):
        super().__init__(f"feature {key!r}: {detail}")
        self.key = key


# --- registry ----------------------------------------------------------------


class RegistryError(OxbenchError):
    """Base class for registry failures."""


class UnknownDataset(RegistryError):
    def __init__(self, name: str):
        super().__init__(f"dataset not in registry: {name!r}")
        self.name = name


class PredefinedSplitExists(RegistryError):
    def __init__(self, name: str):
        super().__init__(f"dataset {name!r} already has a predefined eval split")
        self.name = name


# --- action-space algebra ----------------------------------------------------


class ActionSpaceError(OxbenchError):
    """Base class for action/observation algebra failures."""


class DomainError(ActionSpaceError):
    pass


class DegenerateRange(ActionSpaceError):
    pass


class LengthMismatch(ActionSpaceError):
    pass


class EmptyInput(ActionSpaceError):
    pass


class SignatureParseError(ActionSpaceError):
    pass


# --- adapter protocol ---------------------------------------------------------


class AdapterError(OxbenchError):
    """Base class for adapter transport/protocol failures."""


class HandshakeFailure(AdapterError):
    pass


class TransportClosed(AdapterError):
    pass


class UnsupportedChannels(AdapterError):
    def __init__(self, channels: int):
        super().__init__(f"unsupported image channel count: {channels}")
        self.channels = channels


class NoImageAvailable(AdapterError):
    pass


# --- reporting ----------------------------------------------------------------


class MissingManifest(OxbenchError):
    pass


class ConfigError(OxbenchError):
    pass
