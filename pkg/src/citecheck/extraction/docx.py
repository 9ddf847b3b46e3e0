"""Shallow .docx text extraction: paragraph text from the document XML.

No styling, no layout; tables flatten row-wise because cell paragraphs are
visited in document order. That is the full extent of docx support.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
import zipfile

from ..errors import CorruptArchive, MissingDocumentPart

_W_NS = "http://schemas.openxmlformats.org/wordprocessingml/2006/main"
_P_TAG = f"{{{_W_NS}}}p"
_T_TAG = f"{{{_W_NS}}}t"
_TAB_TAG = f"{{{_W_NS}}}tab"
_BR_TAG = f"{{{_W_NS}}}br"


def extract_docx_text(docx_bytes: bytes) -> list[str]:
    """Paragraph strings from word/document.xml, in document order."""
    try:
        archive = zipfile.ZipFile(io.BytesIO(docx_bytes))
    except zipfile.BadZipFile as exc:
        raise CorruptArchive(f"not a readable .docx archive: {exc}") from exc
    with archive:
        try:
            xml_bytes = archive.read("word/document.xml")
        except KeyError as exc:
            raise MissingDocumentPart("archive has no word/document.xml") from exc
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise CorruptArchive(f"document.xml is not well-formed: {exc}") from exc

    paragraphs: list[str] = []
    for para in root.iter(_P_TAG):
        parts: list[str] = []
        for node in para.iter():
            if node.tag == _T_TAG:
                parts.append(node.text or "")
            elif node.tag in (_TAB_TAG, _BR_TAG):
                parts.append(" ")
        text = "".join(parts).strip()
        if text:
            paragraphs.append(text)
    return paragraphs
