import gzip
import io
from typing import Optional

import pytest


def wet_record_bytes(
    record_type: str = "conversion",
    uri: Optional[str] = "https://en.wikipedia.org/wiki/Example",
    date: Optional[str] = "2014-03-01T12:00:00Z",
    body: bytes = b"Example body text.",
    content_length: Optional[int] = None,
    extra_headers: Optional[dict] = None,
) -> bytes:
    headers = [b"WARC/1.0\r\n", f"WARC-Type: {record_type}\r\n".encode()]
    if uri is not None:
        headers.append(f"WARC-Target-URI: {uri}\r\n".encode())
    if date is not None:
        headers.append(f"WARC-Date: {date}\r\n".encode())
    for key, value in (extra_headers or {}).items():
        headers.append(f"{key}: {value}\r\n".encode())
    length = len(body) if content_length is None else content_length
    headers.append(f"Content-Length: {length}\r\n".encode())
    return b"".join(headers) + b"\r\n" + body + b"\r\n\r\n"


def wet_stream(*records: bytes, gzipped: bool = False) -> io.BytesIO:
    blob = b"".join(records)
    if gzipped:
        blob = gzip.compress(blob)
    return io.BytesIO(blob)


ENGLISH_BODY = (
    b"The quick brown fox jumped over the lazy dog and then it ran into the woods "
    b"because it was being chased by the farmer who had seen it near the hens."
)
FRENCH_BODY = (
    b"Le renard brun rapide a saute par-dessus le chien paresseux et puis il a couru "
    b"dans les bois parce qu'il etait poursuivi par le fermier qui l'avait vu."
)


@pytest.fixture
def english_wiki_record():
    return wet_record_bytes(uri="https://en.wikipedia.org/wiki/Fox", body=ENGLISH_BODY)


TEMPLATE_TEXT = (
    "the template page repeats tmplaa tmplbb tmplcc tmpldd tmplee tmplff "
    "tmplgg tmplhh tmplii tmpljj tmplkk tmplll and some of it verbatim"
)


def distinct_text(i: int) -> str:
    # mostly-unique vocabulary, with just enough stopwords to pass the
    # English filter (5 of 21 tokens ~ 0.24 ratio)
    unique = " ".join(f"tok{i}x{j}" for j in range(16))
    return f"the {unique} and some of it"


def build_fixture_corpus(directory, duplicates_by_year, docs_per_year=12):
    """Write one .wet file of wikipedia-English records; the per-year count
    of template duplicates controls the cohort's mean pairwise similarity
    under the hash backend."""
    records = []
    serial = 0
    for year in sorted(duplicates_by_year):
        dup_count = duplicates_by_year[year]
        for i in range(docs_per_year):
            text = TEMPLATE_TEXT if i < dup_count else distinct_text(serial)
            serial += 1
            records.append(
                wet_record_bytes(
                    uri=f"https://en.wikipedia.org/wiki/Page_{year}_{i}",
                    date=f"{year}-06-01T00:00:{i:02d}Z",
                    body=text.encode(),
                )
            )
    path = directory / "fixture.wet"
    path.write_bytes(b"".join(records))
    return path
