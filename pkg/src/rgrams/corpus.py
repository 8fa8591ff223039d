"""Text ingestion: normalization, terminal encoding, sequence boundaries.

Terminals are Unicode scalar values interned into a dense id space in order
of first appearance. Separator characters never become symbols; each maximal
run of separators collapses into one boundary between segments.
"""

from __future__ import annotations

import codecs
from array import array
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import CorpusDecodeError, DomainError, UnknownSymbolError

DEFAULT_SEPARATORS = frozenset("\n")


@dataclass(frozen=True)
class NormalizationOptions:
    lowercase: bool = True
    digits_to_N: bool = False


class _LowerMap(dict):
    """Lazy codepoint -> str map for str.translate; lowercases per character."""

    def __missing__(self, cp: int) -> str:
        v = chr(cp).lower()
        self[cp] = v
        return v


_LOWER = _LowerMap()
# 'N' is the digit placeholder; it must survive re-normalization, so the
# combined map never lowercases it (see normalize docstring).
_LOWER_DIGITS = _LowerMap({0x30 + d: "N" for d in range(10)})
_LOWER_DIGITS[ord("N")] = "N"
_DIGITS_ONLY = str.maketrans("0123456789", "NNNNNNNNNN")


def normalize(text: str, options: NormalizationOptions = NormalizationOptions()) -> str:
    """Apply lowercasing and/or digit substitution; idempotent.

    Lowercasing is per character (full Unicode case mapping, no context
    sensitivity), so output length can change only through case mapping and
    chunked processing gives the same result as one-shot processing. With
    digits_to_N, ASCII digits become 'N' and 'N' itself is exempt from
    lowercasing; that keeps normalize a fixed point on its own output.
    """
    if options.lowercase:
        return text.translate(_LOWER_DIGITS if options.digits_to_N else _LOWER)
    if options.digits_to_N:
        return text.translate(_DIGITS_ONLY)
    return text


def substitute_digits(text: str) -> str:
    """ASCII digits 0-9 become 'N'; everything else is untouched."""
    return text.translate(_DIGITS_ONLY)


class SymbolTable:
    """Bijection between terminal characters and dense ids [0, len)."""

    __slots__ = ("_chars", "_ids")

    def __init__(self, chars: Iterable[str] = ()):
        self._chars: list[str] = []
        self._ids: dict[str, int] = {}
        for ch in chars:
            self.intern(ch)

    def intern(self, ch: str) -> int:
        sid = self._ids.get(ch)
        if sid is None:
            sid = len(self._chars)
            self._ids[ch] = sid
            self._chars.append(ch)
        return sid

    def id_of(self, ch: str) -> int | None:
        return self._ids.get(ch)

    def char_of(self, sid: int) -> str:
        if 0 <= sid < len(self._chars):
            return self._chars[sid]
        raise UnknownSymbolError(sid)

    def chars(self) -> tuple[str, ...]:
        return tuple(self._chars)

    def clone(self) -> "SymbolTable":
        return SymbolTable(self._chars)

    def __len__(self) -> int:
        return len(self._chars)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SymbolTable) and self._chars == other._chars

    def __repr__(self) -> str:
        return f"SymbolTable({len(self._chars)} terminals)"


@dataclass
class BoundedSequence:
    """Symbol ids plus boundary positions (each in [0, len(symbols)]).

    doc_ids tags each boundary with the ingestion document it came from;
    single-document encodes leave them all zero. alphabet resolves terminal
    ids back to characters; compressed sequences keep the terminal alphabet
    and carry rule ids above it.
    """

    symbols: array | list[int]
    boundaries: list[int] = field(default_factory=list)
    doc_ids: list[int] = field(default_factory=list)
    alphabet: SymbolTable = field(default_factory=SymbolTable)

    def __len__(self) -> int:
        return len(self.symbols)

    def validate(self) -> None:
        n = len(self.symbols)
        if len(self.doc_ids) != len(self.boundaries):
            raise DomainError("doc_ids and boundaries lengths differ")
        prev = -1
        for b in self.boundaries:
            if not 0 <= b <= n:
                raise DomainError(f"boundary {b} outside [0, {n}]")
            if b <= prev:
                raise DomainError("boundaries not strictly increasing")
            prev = b

    def segments(self) -> Iterator[tuple[int, int]]:
        """(start, end) index pairs of the boundary-free stretches."""
        lo = 0
        for b in self.boundaries:
            yield lo, b
            lo = b
        yield lo, len(self.symbols)


class ChunkEncoder:
    """Incremental encoder: feed text chunks, then finish() once.

    Chunk splits never change the result; separator-run state carries over.
    """

    def __init__(self, separators: frozenset[str] = DEFAULT_SEPARATORS, doc_id: int = 0):
        self._seps = np.sort(np.array([ord(c) for c in separators], dtype=np.uint32))
        self._table = SymbolTable()
        self._parts: list[np.ndarray] = []
        self._boundaries: list[int] = []
        self._doc_ids: list[int] = []
        self._count = 0
        self._in_sep_run = False
        self._doc_id = doc_id

    def feed(self, text: str) -> None:
        if not text:
            return
        cps = np.frombuffer(text.encode("utf-32-le", "surrogatepass"), dtype=np.uint32)
        mask = np.isin(cps, self._seps) if self._seps.size else np.zeros(len(cps), bool)
        if mask.any():
            prev = np.empty(len(cps), bool)
            prev[0] = self._in_sep_run
            prev[1:] = mask[:-1]
            starts = np.nonzero(mask & ~prev)[0]
            keep = ~mask
            kept_before = np.concatenate(([0], np.cumsum(keep)))
            for i in starts:
                self._boundaries.append(self._count + int(kept_before[i]))
                self._doc_ids.append(self._doc_id)
            self._in_sep_run = bool(mask[-1])
            cps = cps[keep]
        else:
            self._in_sep_run = False
        if cps.size:
            uniq, first, inv = np.unique(cps, return_index=True, return_inverse=True)
            lut = np.empty(len(uniq), dtype=np.int32)
            intern = self._table.intern
            # ids must not depend on chunking, so intern new characters in
            # first-appearance order, not np.unique's sorted order
            for j in np.argsort(first, kind="stable"):
                lut[j] = intern(chr(int(uniq[j])))
            self._parts.append(lut[inv])
            self._count += cps.size

    def finish(self) -> BoundedSequence:
        symbols = array("i")
        if self._parts:
            symbols.frombytes(np.concatenate(self._parts).astype(np.int32).tobytes())
        return BoundedSequence(symbols, self._boundaries, self._doc_ids, self._table)


def encode(text: str, separators: frozenset[str] = DEFAULT_SEPARATORS) -> BoundedSequence:
    """Encode text into terminal ids; separator runs become boundaries."""
    enc = ChunkEncoder(separators)
    enc.feed(text)
    return enc.finish()


def decode_terminals(seq: BoundedSequence, separator: str = "\n") -> str:
    """Inverse of encode up to separator-run collapsing.

    Every symbol must be a terminal of seq.alphabet; a rule id (or anything
    else outside the alphabet) is a domain error.
    """
    table = seq.alphabet
    limit = len(table)
    chars = []
    for s in seq.symbols:
        if 0 <= s < limit:
            chars.append(table.char_of(s))
        else:
            raise DomainError(f"symbol {s} is not a terminal of this sequence")
    out = []
    bi = 0
    bnd = seq.boundaries
    nb = len(bnd)
    for i, ch in enumerate(chars):
        while bi < nb and bnd[bi] == i:
            out.append(separator)
            bi += 1
        out.append(ch)
    while bi < nb:
        out.append(separator)
        bi += 1
    return "".join(out)


def read_text_chunks(path, chunk_bytes: int = 1 << 20) -> Iterator[str]:
    """Stream a UTF-8 file as str chunks; bad bytes raise with their offset."""
    dec = codecs.getincrementaldecoder("utf-8")()
    consumed = 0
    with open(path, "rb") as fh:
        while True:
            blob = fh.read(chunk_bytes)
            final = not blob
            try:
                text = dec.decode(blob, final)
            except UnicodeDecodeError as exc:
                offset = consumed + len(blob) - len(exc.object) + exc.start
                raise CorpusDecodeError(offset) from exc
            consumed += len(blob)
            if text:
                yield text
            if final:
                return


def encode_file(
    path,
    separators: frozenset[str] = DEFAULT_SEPARATORS,
    options: NormalizationOptions | None = None,
    chunk_bytes: int = 1 << 20,
) -> BoundedSequence:
    """Stream-normalize and encode a file in fixed-size chunks."""
    enc = ChunkEncoder(separators)
    for chunk in read_text_chunks(path, chunk_bytes):
        enc.feed(normalize(chunk, options) if options else chunk)
    return enc.finish()
