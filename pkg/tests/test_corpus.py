"""Ingestion tests: normalization, boilerplate stripping, passage selectors."""

import json
from pathlib import Path

import numpy as np
import pytest

from influence_scan import (
    EmptyAfterStrip,
    EncodingError,
    ManifestError,
    MarkerNotFound,
    PassageSelector,
    SelectorOutOfRange,
    extract_passage,
    load_document,
    load_manifest,
    normalize_text,
    resolve_selector,
)

DATA = Path(__file__).parent / "data"
CORPUS = Path(__file__).resolve().parents[1] / "corpus"

GUTENBERG = (
    "The Project Gutenberg eBook of Moby-Dick\n"
    "\n"
    "*** START OF THE PROJECT GUTENBERG EBOOK MOBY-DICK ***\n"
    "\n"
    "Call me Ishmael.\n"
    "\n"
    "*** END OF THE PROJECT GUTENBERG EBOOK MOBY-DICK ***\n"
    "\n"
    "License text follows.\n"
)


def write(tmp_path, name, content, encoding="utf-8"):
    p = tmp_path / name
    p.write_bytes(content.encode(encoding) if isinstance(content, str) else content)
    return p


def test_marker_stripping_keeps_only_the_body(tmp_path):
    doc = load_document(write(tmp_path, "moby.txt", GUTENBERG), "moby")
    assert doc.text == "Call me Ishmael."


def test_without_markers_the_whole_file_is_body(tmp_path):
    doc = load_document(write(tmp_path, "plain.txt", "Call me Ishmael.\n"), "plain")
    assert doc.text == "Call me Ishmael."


def test_crlf_fixture_matches_hand_normalized_copy():
    doc = load_document(DATA / "wrapped_crlf_raw.txt", "crlf")
    expected = (DATA / "wrapped_crlf_normalized.txt").read_text(encoding="utf-8")
    assert doc.text == expected
    assert "\r" not in doc.text
    # the run of three blank lines collapsed to exactly one paragraph break
    assert doc.text.count("\n\n") == 1
    assert "\n\n\n" not in doc.text


def test_normalization_is_idempotent():
    normalized = (DATA / "wrapped_crlf_normalized.txt").read_text(encoding="utf-8")
    assert normalize_text(normalized) == normalized


def test_curly_punctuation_is_not_folded():
    doc = load_document(DATA / "wrapped_crlf_raw.txt", "crlf")
    assert "“" in doc.text and "”" in doc.text
    assert "—" in doc.text


def test_nfc_composes_combining_marks(tmp_path):
    doc = load_document(write(tmp_path, "nfc.txt", "exposé\n"), "nfc")
    assert doc.text == "exposé"


def test_bad_utf8_raises_encoding_error(tmp_path):
    p = write(tmp_path, "bad.txt", b"Call me \xff\xfe Ishmael.")
    with pytest.raises(EncodingError):
        load_document(p, "bad")


def test_markers_with_empty_body_raise(tmp_path):
    content = ("*** START OF THE PROJECT GUTENBERG EBOOK X ***\n"
               "\n"
               "*** END OF THE PROJECT GUTENBERG EBOOK X ***\n")
    with pytest.raises(EmptyAfterStrip):
        load_document(write(tmp_path, "empty.txt", content), "empty")


def test_char_span_identity(tmp_path):
    doc = load_document(write(tmp_path, "m.txt", GUTENBERG), "m")
    sel = PassageSelector("char_span", 0, 16)
    assert extract_passage(doc, sel) == "Call me Ishmael."


def test_char_span_bounds_are_checked(tmp_path):
    doc = load_document(write(tmp_path, "m.txt", GUTENBERG), "m")
    for bad in (PassageSelector("char_span", -1, 4),
                PassageSelector("char_span", 0, 17),
                PassageSelector("char_span", 9, 9)):
        with pytest.raises(SelectorOutOfRange):
            resolve_selector(doc, bad)


def test_line_span_selects_whole_lines(tmp_path):
    doc = load_document(write(tmp_path, "p.txt", "First one.\n\nSecond one.\n\nThird.\n"), "p")
    assert doc.text.split("\n") == ["First one.", "", "Second one.", "", "Third."]
    assert extract_passage(doc, PassageSelector("line_span", 2, 3)) == "Second one."
    assert extract_passage(doc, PassageSelector("line_span", 0, 3)) == "First one.\n\nSecond one."


def test_line_span_bounds_are_checked(tmp_path):
    doc = load_document(write(tmp_path, "p.txt", "First one.\n\nSecond one.\n"), "p")
    with pytest.raises(SelectorOutOfRange):
        resolve_selector(doc, PassageSelector("line_span", 0, 9))


def test_marker_pair_selects_chapter_body():
    doc = load_document(CORPUS / "melville_israel_potter.txt", "ip")
    passage = extract_passage(doc, PassageSelector("marker_pair", "CHAPTER 4", "CHAPTER 5"))
    assert passage.startswith("Escaped from the guard, Israel made his way")
    assert passage.endswith("silence was his only friend in England.")
    assert "CHAPTER" not in passage


def test_marker_pair_missing_marker(tmp_path):
    doc = load_document(write(tmp_path, "m.txt", "Only body here.\n"), "m")
    with pytest.raises(MarkerNotFound):
        resolve_selector(doc, PassageSelector("marker_pair", "CHAPTER 9", "CHAPTER 10"))


def test_marker_pair_ambiguous_marker(tmp_path):
    content = "HEAD\n\nbody one\n\nHEAD\n\nbody two\n\nTAIL\n"
    doc = load_document(write(tmp_path, "m.txt", content), "m")
    with pytest.raises(MarkerNotFound) as err:
        resolve_selector(doc, PassageSelector("marker_pair", "HEAD", "TAIL"))
    assert "2" in str(err.value)


def test_extract_passage_matches_resolved_offsets(tmp_path):
    doc = load_document(CORPUS / "melville_typee.txt", "ty")
    sel = PassageSelector("marker_pair", "CHAPTER XXV.", "CHAPTER XXVI.")
    start, end = resolve_selector(doc, sel)
    assert doc.text[start:end] == extract_passage(doc, sel)


def test_stripping_never_loses_paragraph_text(tmp_path):
    rng = np.random.default_rng(7)
    words = ["sail", "whale", "rope", "deck", "tide", "wind", "brine", "mast"]
    for trial in range(20):
        paras = []
        for _ in range(rng.integers(1, 5)):
            k = int(rng.integers(3, 12))
            paras.append(" ".join(words[i] for i in rng.integers(0, len(words), k)))
        content = ("junk header\n\n*** START OF THE EBOOK ***\n\n"
                   + "\n\n".join(paras)
                   + "\n\n*** END OF THE EBOOK ***\n\njunk footer\n")
        doc = load_document(write(tmp_path, f"r{trial}.txt", content), f"r{trial}")
        for para in paras:
            assert para in doc.text


def test_manifest_loads_documents_and_instances():
    man = load_manifest(CORPUS / "manifest.json")
    assert len(man.documents) == 8
    assert [inst.instance_id for inst in man.instances] == [1, 2, 3, 4]
    for entry in man.documents.values():
        assert Path(entry.path).is_file()
    inst1 = man.instances[0]
    assert inst1.candidate_doc == "melville_typee"
    assert inst1.reference_doc == "stewart_south_seas"
    assert len(inst1.expert_spans) == 2
    sides = {side for side, _, _ in inst1.expert_spans}
    assert sides == {"candidate", "reference"}


def manifest_dict():
    return {
        "documents": [
            {"id": "a", "title": "A", "path": "a.txt"},
            {"id": "b", "title": "B", "path": "b.txt"},
        ],
        "instances": [
            {
                "instance_id": 1,
                "candidate_doc": "a",
                "reference_doc": "b",
                "candidate_range": {"mode": "char_span", "start": 0, "end": 4},
                "reference_range": {"mode": "char_span", "start": 0, "end": 4},
            }
        ],
    }


def write_manifest(tmp_path, payload):
    for name in ("a.txt", "b.txt"):
        (tmp_path / name).write_text("some body text\n", encoding="utf-8")
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps(payload), encoding="utf-8")
    return p


def test_manifest_rejects_duplicate_document_ids(tmp_path):
    payload = manifest_dict()
    payload["documents"].append({"id": "a", "title": "A2", "path": "a.txt"})
    with pytest.raises(ManifestError):
        load_manifest(write_manifest(tmp_path, payload))


def test_manifest_rejects_unknown_document_reference(tmp_path):
    payload = manifest_dict()
    payload["instances"][0]["reference_doc"] = "missing"
    with pytest.raises(ManifestError):
        load_manifest(write_manifest(tmp_path, payload))


def test_manifest_rejects_self_comparison(tmp_path):
    payload = manifest_dict()
    payload["instances"][0]["reference_doc"] = "a"
    with pytest.raises(ManifestError):
        load_manifest(write_manifest(tmp_path, payload))
