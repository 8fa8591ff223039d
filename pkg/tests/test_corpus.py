import pytest
from hypothesis import given, strategies as st

from rgrams.corpus import (
    ChunkEncoder,
    NormalizationOptions,
    decode_terminals,
    encode,
    encode_file,
    normalize,
    read_text_chunks,
    substitute_digits,
)
from rgrams.errors import CorpusDecodeError, DomainError

NL = frozenset("\n")
BOTH = NormalizationOptions(lowercase=True, digits_to_N=True)


class TestNormalize:
    def test_lowercase_and_digits(self):
        assert normalize("Ranneberger (Born 1949)", BOTH) == "ranneberger (born NNNN)"

    def test_fixed_point(self):
        assert normalize("abc") == "abc"

    def test_nonascii(self):
        assert normalize("ÅÄÖ 12", BOTH) == "åäö NN"

    def test_digits_only(self):
        assert substitute_digits("a1b2") == "aNbN"
        assert normalize("A1", NormalizationOptions(lowercase=False, digits_to_N=True)) == "AN"

    def test_placeholder_survives(self):
        # 'N' is the digit placeholder and must not be lowercased away
        assert normalize("N9", BOTH) == "NN"
        assert normalize(normalize("N9", BOTH), BOTH) == "NN"

    @given(st.text(max_size=200))
    def test_idempotent_default(self, s):
        once = normalize(s)
        assert normalize(once) == once

    @given(st.text(max_size=200))
    def test_idempotent_with_digits(self, s):
        once = normalize(s, BOTH)
        assert normalize(once, BOTH) == once

    @given(st.text(max_size=200))
    def test_no_uppercase_remains(self, s):
        out = normalize(s)
        assert all(c.lower() == c for c in out)


class TestEncode:
    def test_single_newline(self):
        seq = encode("ab\ncd", NL)
        assert len(seq.symbols) == 4
        assert seq.boundaries == [2]

    def test_space_is_a_symbol(self):
        seq = encode("a b", NL)
        assert len(seq.symbols) == 3
        assert seq.boundaries == []
        assert seq.alphabet.char_of(seq.symbols[1]) == " "

    def test_separator_runs_collapse(self):
        seq = encode("\n\nxy\n", NL)
        assert len(seq.symbols) == 2
        assert seq.boundaries == [0, 2]

    def test_first_appearance_ids(self):
        seq = encode("bca")
        assert [seq.alphabet.char_of(i) for i in range(3)] == ["b", "c", "a"]

    def test_empty(self):
        seq = encode("")
        assert len(seq) == 0 and seq.boundaries == []

    def test_multiple_separator_chars(self):
        seq = encode("a\tb\nc", frozenset("\n\t"))
        assert len(seq.symbols) == 3
        assert seq.boundaries == [1, 2]

    def test_doc_ids_parallel_boundaries(self):
        seq = encode("a\nb\nc")
        assert seq.doc_ids == [0, 0]
        seq.validate()

    def test_chunking_does_not_change_result(self):
        text = "the cat\nsat on\nthe mat\n"
        whole = encode(text, NL)
        for cut1 in range(len(text)):
            enc = ChunkEncoder(NL)
            enc.feed(text[:cut1])
            enc.feed(text[cut1:])
            got = enc.finish()
            assert list(got.symbols) == list(whole.symbols)
            assert got.boundaries == whole.boundaries
            assert got.alphabet == whole.alphabet


class TestDecodeTerminals:
    def test_boundary_restored(self):
        seq = encode("a\nb", NL)
        assert decode_terminals(seq, "\n") == "a\nb"

    def test_no_boundary_round_trip(self):
        s = "hello world"
        assert decode_terminals(encode(s, NL)) == s

    def test_runs_collapse(self):
        assert decode_terminals(encode("a\n\nb", NL)) == "a\nb"

    def test_trailing_and_leading(self):
        assert decode_terminals(encode("\nab\n", NL)) == "\nab\n"

    def test_rejects_nonterminal(self):
        seq = encode("ab", NL)
        seq.symbols = list(seq.symbols) + [99]
        with pytest.raises(DomainError):
            decode_terminals(seq)

    @given(st.text(alphabet="ab é世", max_size=80))
    def test_round_trip_no_separators_involved(self, s):
        assert decode_terminals(encode(s, NL)) == s

    @given(
        st.lists(st.text(alphabet="abc é", min_size=1, max_size=8), min_size=1, max_size=6)
    )
    def test_round_trip_single_newlines(self, parts):
        s = "\n".join(parts)
        assert decode_terminals(encode(s, NL)) == s


class TestValidate:
    def test_bad_boundary_order(self):
        seq = encode("a\nb\nc", NL)
        seq.boundaries = [2, 1]
        with pytest.raises(DomainError):
            seq.validate()

    def test_boundary_out_of_range(self):
        seq = encode("ab", NL)
        seq.boundaries = [5]
        seq.doc_ids = [0]
        with pytest.raises(DomainError):
            seq.validate()

    def test_segments(self):
        seq = encode("ab\ncd\n", NL)
        assert list(seq.segments()) == [(0, 2), (2, 4), (4, 4)]


class TestFiles:
    def test_encode_file_matches_encode(self, tmp_path):
        text = "The Cat\nSat 99 Times\n"
        p = tmp_path / "c.txt"
        p.write_text(text, encoding="utf-8")
        via_file = encode_file(str(p), NL, BOTH, chunk_bytes=4)
        direct = encode(normalize(text, BOTH), NL)
        assert list(via_file.symbols) == list(direct.symbols)
        assert via_file.boundaries == direct.boundaries
        assert via_file.alphabet == direct.alphabet

    def test_bad_utf8_offset(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_bytes(b"abcd\xff\xfeef")
        with pytest.raises(CorpusDecodeError) as info:
            list(read_text_chunks(str(p), chunk_bytes=3))
        assert info.value.byte_offset == 4

    def test_multibyte_across_chunk_boundary(self, tmp_path):
        p = tmp_path / "multi.txt"
        p.write_text("世界 abc", encoding="utf-8")
        text = "".join(read_text_chunks(str(p), chunk_bytes=2))
        assert text == "世界 abc"
