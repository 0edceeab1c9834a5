"""Comparison annotation files.

One comparison per line, UTF-8, `#` starts a comment line:

    weaker_id,stronger_id,Attr1[|Attr2[|Attr3]]

Augmented files append two columns (same line shape, single attribute per
line): `weaker,stronger,Attr,origin,confidence`.
"""

from ..errors import ConfigError, FormatError, VocabularyError
from .types import ORIGIN_ANNOTATED, ORIGIN_MINED, ComparisonRecord

_MAX_ATTRS_PER_LINE = 3


def parse_annotations(path, vocab):
    """Parse a plain or augmented annotation file into ComparisonRecords."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (3, 5):
                raise FormatError(f"{path}:{lineno}: expected 3 or 5 fields, got {len(parts)}")
            weaker, stronger, attr_field = parts[0], parts[1], parts[2]
            if not weaker or not stronger:
                raise FormatError(f"{path}:{lineno}: empty speaker id")
            origin, confidence = ORIGIN_ANNOTATED, 1.0
            if len(parts) == 5:
                origin = parts[3]
                if origin not in (ORIGIN_ANNOTATED, ORIGIN_MINED):
                    raise FormatError(f"{path}:{lineno}: bad origin {origin!r}")
                try:
                    confidence = float(parts[4])
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad confidence {parts[4]!r}") from None
            attrs = attr_field.split("|")
            if not 1 <= len(attrs) <= _MAX_ATTRS_PER_LINE:
                raise FormatError(
                    f"{path}:{lineno}: between 1 and {_MAX_ATTRS_PER_LINE} attributes per line")
            for attr_name in attrs:
                try:
                    attr = vocab.index_of(attr_name)
                except VocabularyError as exc:
                    raise VocabularyError(f"{path}:{lineno}: {exc}") from None
                try:
                    records.append(ComparisonRecord(weaker, stronger, attr, origin, confidence))
                except ConfigError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from None
    return records


def write_annotations(path, records, vocab, with_origin=False):
    """Write one record per line, in list order; augmented columns optional."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            name = vocab.name_of(rec.attribute)
            if with_origin:
                fh.write(f"{rec.weaker},{rec.stronger},{name},{rec.origin},{rec.confidence:.6g}\n")
            else:
                fh.write(f"{rec.weaker},{rec.stronger},{name}\n")
