"""Streaming WET (WARC/1.0 plain-text conversion) parsing and cohort assembly.

Records are framed as: a ``WARC/1.0`` version line, CRLF-terminated header
lines up to a blank line, exactly Content-Length body bytes, then blank-line
separators before the next record. Gzip input is detected by magic bytes.
"""

from __future__ import annotations

import gzip
import hashlib
import io
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import BinaryIO, Callable, Dict, Iterable, Iterator, List, Optional, Tuple
from urllib.parse import urlsplit

from .errors import MalformedHeader, TruncatedBody, YearUnknown

GZIP_MAGIC = b"\x1f\x8b"


class RecordType(Enum):
    WARCINFO = "warcinfo"
    CONVERSION = "conversion"
    OTHER = "other"


@dataclass
class WetRecord:
    record_type: RecordType
    target_uri: Optional[str]
    warc_date: Optional[datetime]
    content_length: int
    body: str
    headers: Dict[str, str] = field(default_factory=dict)


@dataclass
class Document:
    id: str
    year: int
    domain: str
    uri: str
    text: str
    word_count: int


@dataclass
class YearCohort:
    year: int
    documents: List[Document] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.documents)


class _OffsetReader:
    """Line/byte reader over a binary stream that tracks the current offset."""

    def __init__(self, raw: BinaryIO):
        self._raw = raw
        self.offset = 0

    def readline(self) -> bytes:
        line = self._raw.readline()
        self.offset += len(line)
        return line

    def read(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            chunk = self._raw.read(remaining)
            if not chunk:
                break
            chunks.append(chunk)
            remaining -= len(chunk)
        data = b"".join(chunks)
        self.offset += len(data)
        return data


def _maybe_gunzip(stream: BinaryIO) -> BinaryIO:
    buffered = stream if isinstance(stream, io.BufferedReader) else io.BufferedReader(stream)  # type: ignore[arg-type]
    if buffered.peek(2)[:2] == GZIP_MAGIC:
        return gzip.GzipFile(fileobj=buffered)  # type: ignore[return-value]
    return buffered


def _parse_warc_date(value: Optional[str]) -> Optional[datetime]:
    if not value:
        return None
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_wet_stream(
    stream: BinaryIO,
    on_malformed: Optional[Callable[[MalformedHeader], None]] = None,
) -> Iterator[WetRecord]:
    """Lazily yield WetRecords from a (possibly gzipped) WET byte stream.

    A record with an unparseable header is reported once via ``on_malformed``
    and skipped (the parser resynchronizes at the next version line); with no
    callback the error is raised instead. Truncated bodies always abort the
    stream with TruncatedBody.
    """
    reader = _OffsetReader(_maybe_gunzip(stream))
    resyncing = False

    def malformed(message: str, offset: int) -> bool:
        nonlocal resyncing
        err = MalformedHeader(message, offset)
        if on_malformed is None:
            raise err
        on_malformed(err)
        resyncing = True
        return True

    while True:
        line_offset = reader.offset
        line = reader.readline()
        if line == b"":
            return
        stripped = line.rstrip(b"\r\n")
        if stripped == b"":
            continue
        if not stripped.startswith(b"WARC/"):
            if not resyncing:
                malformed("missing WARC version line", line_offset)
            continue
        resyncing = False

        headers: Dict[str, str] = {}
        header_ok = True
        while True:
            hdr_offset = reader.offset
            hline = reader.readline()
            if hline == b"":
                malformed("EOF inside record header", hdr_offset)
                return
            hstripped = hline.rstrip(b"\r\n")
            if hstripped == b"":
                break
            if b":" not in hstripped:
                header_ok = malformed("header line without colon", hdr_offset) and False
                break
            key, _, value = hstripped.partition(b":")
            headers[key.decode("utf-8", "replace").strip().lower()] = value.decode(
                "utf-8", "replace"
            ).strip()
        if not header_ok:
            continue

        raw_length = headers.get("content-length")
        if raw_length is None or not raw_length.isdigit():
            malformed("missing or invalid Content-Length", line_offset)
            continue
        content_length = int(raw_length)

        body_offset = reader.offset
        body_bytes = reader.read(content_length)
        if len(body_bytes) < content_length:
            raise TruncatedBody(
                f"expected {content_length} body bytes, got {len(body_bytes)}",
                body_offset,
            )

        warc_type = headers.get("warc-type", "")
        if warc_type == "warcinfo":
            record_type = RecordType.WARCINFO
        elif warc_type == "conversion":
            record_type = RecordType.CONVERSION
        else:
            record_type = RecordType.OTHER

        yield WetRecord(
            record_type=record_type,
            target_uri=headers.get("warc-target-uri"),
            warc_date=_parse_warc_date(headers.get("warc-date")),
            content_length=content_length,
            body=body_bytes.decode("utf-8", "replace"),
            headers=headers,
        )


def uri_host(uri: Optional[str]) -> Optional[str]:
    if not uri:
        return None
    try:
        host = urlsplit(uri).hostname
    except ValueError:
        return None
    return host.lower() if host else None


def filter_domain(record: WetRecord, domain_pattern: str) -> bool:
    """True iff the lowercased host of target_uri contains the pattern."""
    host = uri_host(record.target_uri)
    return host is not None and domain_pattern in host


def assign_year(record: WetRecord, override: Optional[int] = None) -> int:
    if override is not None:
        return override
    if record.warc_date is None:
        raise YearUnknown("record has no parseable WARC-Date and no override")
    return record.warc_date.year


def document_id(target_uri: str, warc_date: Optional[datetime]) -> str:
    stamp = warc_date.isoformat() if warc_date else ""
    return hashlib.sha1(f"{target_uri}\n{stamp}".encode()).hexdigest()[:16]


def build_cohorts(
    records: Iterable[WetRecord],
    domain_pattern: str,
    year_min: int,
    year_max: int,
    english_filter: Callable[[str], bool],
    year_override: Optional[int] = None,
) -> Tuple[Dict[int, YearCohort], Dict[str, int]]:
    """Assemble per-year cohorts from a record stream.

    Returns (cohorts keyed by year, per-reason drop counters). Conversion
    records are conserved: sum of cohort sizes plus drops equals the number
    of conversion records seen. Individual-record failures never abort.
    """
    cohorts: Dict[int, YearCohort] = {}
    drops: Counter = Counter()
    seen_ids = set()

    for record in records:
        if record.record_type is not RecordType.CONVERSION:
            continue
        host = uri_host(record.target_uri)
        if host is None:
            drops["bad_uri"] += 1
            continue
        if domain_pattern not in host:
            drops["domain"] += 1
            continue
        try:
            year = assign_year(record, year_override)
        except YearUnknown:
            drops["year_unknown"] += 1
            continue
        if not (year_min <= year <= year_max):
            drops["year_window"] += 1
            continue
        text = record.body
        if not text.strip():
            drops["empty_text"] += 1
            continue
        if not english_filter(text):
            drops["language"] += 1
            continue
        doc_id = document_id(record.target_uri or "", record.warc_date)
        if doc_id in seen_ids:
            drops["duplicate"] += 1
            continue
        seen_ids.add(doc_id)
        cohorts.setdefault(year, YearCohort(year=year)).documents.append(
            Document(
                id=doc_id,
                year=year,
                domain=host,
                uri=record.target_uri or "",
                text=text,
                word_count=len(text.split()),
            )
        )

    return cohorts, dict(drops)


def write_manifest(cohorts: Dict[int, YearCohort], path: str) -> None:
    """Write the cohort manifest: year<TAB>doc_id<TAB>word_count<TAB>uri per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for year in sorted(cohorts):
            for doc in cohorts[year].documents:
                fh.write(f"{year}\t{doc.id}\t{doc.word_count}\t{doc.uri}\n")
