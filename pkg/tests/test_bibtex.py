"""Tolerant BibTeX parser: recovery, macros, span fidelity."""

from __future__ import annotations

from citecheck.extraction.bibtex import char_to_byte_span, parse_bibtex


def test_minimal_entry():
    result = parse_bibtex("@article{k1, title={T}, year={2020}}")
    assert len(result.entries) == 1
    entry = result.entries[0]
    assert entry.key == "k1"
    assert entry.entry_type == "article"
    assert entry.field_map() == {"title": "T", "year": "2020"}


def test_recovery_between_valid_entries():
    text = (
        "@article{good1, title={A}, year={2001}}\n"
        "@article{broken, title={unterminated\n"  # no closing brace before next @
        "@article{good2, title={B}, year={2002}}\n"
    )
    result = parse_bibtex(text)
    keys = [e.key for e in result.entries]
    assert keys == ["good1", "good2"]
    assert len(result.errors) == 1
    # Recovery resumes exactly at the next top-level "@".
    good2 = result.entries[1]
    assert text[good2.span[0]:good2.span[1]].startswith("@article{good2")


def test_string_macro_expansion():
    text = "@string{jn = {Nature}} @article{k, journal = jn, title={T}}"
    result = parse_bibtex(text)
    assert result.entries[0].field_map()["journal"] == "Nature"
    assert result.strings == {"jn": "Nature"}


def test_string_concatenation():
    text = '@string{jn = {Nature}} @article{k, journal = jn # " Methods", title={T}}'
    result = parse_bibtex(text)
    assert result.entries[0].field_map()["journal"] == "Nature Methods"


def test_quoted_and_numeric_values():
    text = '@article{k, title = "Quoted {Braces} inside", year = 1999}'
    entry = parse_bibtex(text).entries[0]
    assert entry.field_map()["title"] == "Quoted {Braces} inside"
    assert entry.field_map()["year"] == "1999"


def test_comment_and_preamble_skipped():
    text = ("@comment{ignore {nested} stuff}\n"
            "@preamble{\"\\makeatletter\"}\n"
            "@misc{k, title={Kept}}\n")
    result = parse_bibtex(text)
    assert [e.key for e in result.entries] == ["k"]
    assert not result.errors


def test_spans_reproduce_source_exactly():
    text = "junk before\n@article{k1,\n  title = {Exact},\n  year = {2020}\n}\nafter"
    entry = parse_bibtex(text).entries[0]
    start, end = entry.span
    assert text[start:end].startswith("@article{k1")
    assert text[start:end].endswith("}")
    # Field value span covers the raw delimited value.
    title = entry.get_field("title")
    assert text[title.value_span[0]:title.value_span[1]] == "{Exact}"


def test_char_to_byte_span_with_multibyte_text():
    text = "@article{k, author = {Müller, J.}, title={T}}"
    entry = parse_bibtex(text).entries[0]
    byte_span = char_to_byte_span(text, entry.span)
    raw = text.encode("utf-8")
    assert raw[byte_span[0]:byte_span[1]].decode("utf-8") == text[entry.span[0]:entry.span[1]]


def test_case_insensitive_types_and_fields():
    entry = parse_bibtex("@ARTICLE{K, TITLE={T}, Year={2020}}").entries[0]
    assert entry.entry_type == "article"
    assert entry.field_map() == {"title": "T", "year": "2020"}
    assert entry.key == "K"  # keys stay case-sensitive


def test_parenthesized_entry_delimiters():
    entry = parse_bibtex("@article(k1, title={T})").entries[0]
    assert entry.key == "k1"
    assert entry.field_map()["title"] == "T"


def test_duplicate_field_first_occurrence_wins():
    entry = parse_bibtex("@misc{k, title={First}, title={Second}}").entries[0]
    assert entry.field_map()["title"] == "First"


def test_trailing_comma_tolerated():
    entry = parse_bibtex("@misc{k, title={T},}").entries[0]
    assert entry.field_map() == {"title": "T"}
