"""Exception hierarchy shared across the package."""

from __future__ import annotations


class RtqError(Exception):
    """Base class for all package errors."""


# --- table loading ---------------------------------------------------------

class MalformedCsv(RtqError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        suffix = f" (row {row})" if row is not None else ""
        super().__init__(f"{message}{suffix}")


class EmptyTable(RtqError):
    """CSV had a header but no data rows, or an empty table was used where rows are required."""


# --- vocabulary index ------------------------------------------------------

class NotCategorical(RtqError):
    """Value extraction requested on an attribute the policy rejects."""


class ProviderUnavailable(RtqError):
    """Synonym or completion provider could not be reached."""


class UnsupportedVersion(RtqError):
    def __init__(self, version: int):
        self.version = version
        super().__init__(f"unsupported index file version: {version}")


class CorruptIndex(RtqError):
    """Index file failed structural or checksum validation."""


# --- question processing ---------------------------------------------------

class EmptyQuery(RtqError):
    """Question text was empty or whitespace."""


class BadTemplate(RtqError):
    """Prompt template is missing a required placeholder or repeats one."""


# --- LLM gateway -----------------------------------------------------------

class LlmTimeout(RtqError):
    """The completion endpoint did not answer within the configured timeout."""


class LlmHttpError(RtqError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"completion endpoint returned HTTP {status}: {detail}".rstrip(": "))


class EmptyCompletion(RtqError):
    """The model returned an empty message."""


class NoQueryFound(RtqError):
    """No SELECT statement could be extracted from the completion."""


# --- query engine ----------------------------------------------------------

class SqlSyntaxError(RtqError):
    def __init__(self, message: str, position: int, expected: str | None = None):
        self.position = position
        self.expected = expected
        hint = f", expected {expected}" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class UnsupportedFeature(RtqError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"unsupported SQL feature: {feature}")


class TypeMismatch(RtqError):
    """Operator applied to incompatible operand types."""


class UnknownColumn(RtqError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown column: {name}")


# --- benchmark harness -----------------------------------------------------

class BadRecord(RtqError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"bad question record on line {line}: {reason}")


class NotApplicable(RtqError):
    """Augmentation technique preconditions not met for this question."""


class MismatchedSets(RtqError):
    """Two reports being compared do not cover the same question ids."""


# --- service ---------------------------------------------------------------

class UnknownTable(RtqError):
    def __init__(self, table_id: str):
        self.table_id = table_id
        super().__init__(f"unknown table id: {table_id}")
