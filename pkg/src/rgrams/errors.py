"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: anything derived from ToolError is a
data/validation failure (exit 3), plain OSError is an I/O failure (exit 2).
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all data and validation errors raised by this package."""


class CorpusDecodeError(ToolError):
    """Input bytes are not valid UTF-8; byte_offset points at the bad byte."""

    def __init__(self, byte_offset: int, reason: str = "invalid UTF-8"):
        super().__init__(f"{reason} at byte offset {byte_offset}")
        self.byte_offset = byte_offset


class DomainError(ToolError):
    """An operation was called on a value outside its domain."""


class UnknownSymbolError(DomainError):
    """Symbol id does not resolve to a terminal or rule."""

    def __init__(self, symbol_id: int):
        super().__init__(f"unknown symbol id {symbol_id}")
        self.symbol_id = symbol_id


class GrammarFileError(ToolError):
    """Grammar file could not be parsed; line is 1-based."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class GrammarVersionError(GrammarFileError):
    """Grammar file declares a format version this code does not read."""


class SegmentedFileError(ToolError):
    """Segmented-corpus file could not be parsed; line is 1-based."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class VectorFileError(ToolError):
    """Vector file could not be parsed; line is 1-based."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
