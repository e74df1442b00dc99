"""Binary container for MRI raw data (`.cmri` files).

File layout, all integers little-endian:

    offset  size  field
    0       8     magic ``CMRIRAW1``
    8       4     u32 header length H
    12      H     header text, UTF-8 ``key=value`` lines joined by LF,
                  keys in fixed order (vendor, patient_pseudo_id, matrix_x,
                  matrix_y, coils, field_tesla, te_ms, tr_ms, retention_years)
    12+H    4     u32 acquisition count
    ...           acquisitions: u16 flags, u16 coil_count, u32 num_samples,
                  u32 ky_index, then coil-major f32 real/imag pairs
                  (num_samples complex values per coil)
    end-32  32    SHA-256 digest of every preceding byte

Encoding is canonical: equal datasets produce byte-identical files, which is
what makes SHA-256 content addressing work downstream. Decoding is total on
arbitrary bytes and reports failures as typed errors, never raw exceptions.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"CMRIRAW1"
HEADER_KEYS = (
    "vendor",
    "patient_pseudo_id",
    "matrix_x",
    "matrix_y",
    "coils",
    "field_tesla",
    "te_ms",
    "tr_ms",
    "retention_years",
)
MIN_RETENTION_YEARS = 30
_ACQ_HEAD = struct.Struct("<HHII")
_DIGEST_SIZE = 32
# magic + header length + acquisition count + digest
_MIN_FILE_SIZE = 8 + 4 + 4 + _DIGEST_SIZE


class RawFormatError(Exception):
    """Base class for container encode/decode failures."""


class InvalidDataset(RawFormatError):
    """Dataset violates a type invariant and cannot be encoded."""


class BadMagic(RawFormatError):
    pass


class TruncatedFile(RawFormatError):
    pass


class ChecksumMismatch(RawFormatError):
    pass


class HeaderParseError(RawFormatError):
    pass


class InvariantViolation(RawFormatError):
    pass


@dataclass
class DatasetHeader:
    """Vendor identification header. ``patient_pseudo_id`` is pseudonymous by
    contract; the schema has no PHI fields."""

    vendor: str
    patient_pseudo_id: str
    matrix_x: int
    matrix_y: int
    coils: int
    field_tesla: float
    te_ms: float
    tr_ms: float
    retention_years: int = MIN_RETENTION_YEARS


@dataclass(eq=False)
class Acquisition:
    """One Cartesian phase-encode line across all coils.

    ``samples`` is coil-major: coil 0's num_samples values first. Stored on
    disk as f32 LE real/imag pairs, so complex64 round-trips exactly.
    """

    flags: int
    coil_count: int
    num_samples: int
    ky_index: int
    samples: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, Acquisition):
            return NotImplemented
        return (
            self.flags == other.flags
            and self.coil_count == other.coil_count
            and self.num_samples == other.num_samples
            and self.ky_index == other.ky_index
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(eq=False)
class RawDataset:
    header: DatasetHeader
    acquisitions: list[Acquisition] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RawDataset):
            return NotImplemented
        return (
            self.header == other.header
            and len(self.acquisitions) == len(other.acquisitions)
            and all(a == b for a, b in zip(self.acquisitions, other.acquisitions))
        )


def validate_header(h: DatasetHeader) -> list[str]:
    """Return one message per violated header invariant; empty means valid.

    Never raises: this is the report-producing half used by both encode and
    decode paths.
    """
    report = []
    for name in ("vendor", "patient_pseudo_id"):
        value = getattr(h, name)
        if not isinstance(value, str):
            report.append(f"{name}: must be a string")
        elif "\n" in value:
            report.append(f"{name}: must not contain line breaks")
    for name in ("matrix_x", "matrix_y", "coils"):
        value = getattr(h, name)
        if not isinstance(value, int) or value < 1:
            report.append(f"{name}: must be an integer >= 1 (got {value!r})")
    for name in ("field_tesla", "te_ms", "tr_ms"):
        value = getattr(h, name)
        if not isinstance(value, (int, float)) or not value > 0:
            report.append(f"{name}: must be a positive number (got {value!r})")
    if not isinstance(h.retention_years, int) or h.retention_years < MIN_RETENTION_YEARS:
        report.append(
            f"retention_years: must be an integer >= {MIN_RETENTION_YEARS} "
            f"(got {h.retention_years!r})"
        )
    return report


def validate_dataset(d: RawDataset) -> list[str]:
    """Header report plus per-acquisition invariant checks."""
    report = validate_header(d.header)
    if report:
        return report
    seen_ky = set()
    for i, acq in enumerate(d.acquisitions):
        where = f"acquisitions[{i}]"
        if acq.coil_count != d.header.coils:
            report.append(f"{where}: coil_count {acq.coil_count} != header coils {d.header.coils}")
        if acq.num_samples != d.header.matrix_x:
            report.append(
                f"{where}: num_samples {acq.num_samples} != header matrix_x {d.header.matrix_x}"
            )
        if not 0 <= acq.ky_index < d.header.matrix_y:
            report.append(f"{where}: ky_index {acq.ky_index} outside [0, {d.header.matrix_y})")
        if acq.ky_index in seen_ky:
            report.append(f"{where}: duplicate ky_index {acq.ky_index}")
        seen_ky.add(acq.ky_index)
        if not 0 <= acq.flags < 1 << 16:
            report.append(f"{where}: flags must fit in 16 bits")
        if len(acq.samples) != acq.coil_count * acq.num_samples:
            report.append(
                f"{where}: samples length {len(acq.samples)} != "
                f"coil_count * num_samples = {acq.coil_count * acq.num_samples}"
            )
    return report


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def encode_header(h: DatasetHeader) -> bytes:
    lines = [f"{key}={_format_value(getattr(h, key))}" for key in HEADER_KEYS]
    return "\n".join(lines).encode("utf-8")


def encode_dataset(d: RawDataset) -> bytes:
    """Serialize a dataset to canonical `.cmri` bytes.

    Raises InvalidDataset when any type invariant is violated. Acquisitions
    are written in ascending ky order regardless of input order (canonical
    form).
    """
    report = validate_dataset(d)
    if report:
        raise InvalidDataset("; ".join(report))
    header_bytes = encode_header(d.header)
    parts = [MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
    ordered = sorted(d.acquisitions, key=lambda a: a.ky_index)
    parts.append(struct.pack("<I", len(ordered)))
    for acq in ordered:
        parts.append(_ACQ_HEAD.pack(acq.flags, acq.coil_count, acq.num_samples, acq.ky_index))
        samples = np.ascontiguousarray(acq.samples, dtype="<c8")
        parts.append(samples.tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def _parse_header(text_bytes: bytes) -> DatasetHeader:
    try:
        text = text_bytes.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise HeaderParseError(f"header is not valid UTF-8: {exc}") from None
    values: dict[str, str] = {}
    for line in text.split("\n") if text else []:
        key, sep, value = line.partition("=")
        if not sep:
            raise HeaderParseError(f"malformed header line {line!r}")
        if key in values:
            raise HeaderParseError(f"duplicate header key {key!r}")
        if key not in HEADER_KEYS:
            raise HeaderParseError(f"unknown header key {key!r}")
        values[key] = value
    missing = [key for key in HEADER_KEYS if key not in values]
    if missing:
        raise HeaderParseError(f"missing header keys: {', '.join(missing)}")

    def _int(key: str) -> int:
        try:
            return int(values[key])
        except ValueError:
            raise HeaderParseError(f"{key}: expected integer, got {values[key]!r}") from None

    def _float(key: str) -> float:
        try:
            return float(values[key])
        except ValueError:
            raise HeaderParseError(f"{key}: expected number, got {values[key]!r}") from None

    return DatasetHeader(
        vendor=values["vendor"],
        patient_pseudo_id=values["patient_pseudo_id"],
        matrix_x=_int("matrix_x"),
        matrix_y=_int("matrix_y"),
        coils=_int("coils"),
        field_tesla=_float("field_tesla"),
        te_ms=_float("te_ms"),
        tr_ms=_float("tr_ms"),
        retention_years=_int("retention_years"),
    )


def decode_dataset(data: bytes) -> RawDataset:
    """Parse `.cmri` bytes back into a dataset.

    Total on arbitrary input: every failure mode maps to a RawFormatError
    subclass. The trailing digest is verified before any structure beyond the
    magic is trusted, so a single flipped bit anywhere is always rejected.
    Acquisitions come back sorted ascending by ky_index.
    """
    data = bytes(data)
    if len(data) >= 8 and data[:8] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {data[:8]!r}")
    if len(data) < _MIN_FILE_SIZE:
        raise TruncatedFile(f"file is {len(data)} bytes, minimum is {_MIN_FILE_SIZE}")
    body, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch("trailing SHA-256 digest does not match file contents")

    pos = 8
    (header_len,) = struct.unpack_from("<I", body, pos)
    pos += 4
    if pos + header_len + 4 > len(body):
        raise TruncatedFile("declared header length exceeds file size")
    header = _parse_header(body[pos : pos + header_len])
    pos += header_len
    header_report = validate_header(header)
    if header_report:
        raise InvariantViolation("; ".join(header_report))

    (n_acq,) = struct.unpack_from("<I", body, pos)
    pos += 4
    acquisitions = []
    for _ in range(n_acq):
        if pos + _ACQ_HEAD.size > len(body):
            raise TruncatedFile("acquisition record extends past end of file")
        flags, coil_count, num_samples, ky_index = _ACQ_HEAD.unpack_from(body, pos)
        pos += _ACQ_HEAD.size
        sample_bytes = coil_count * num_samples * 8
        if pos + sample_bytes > len(body):
            raise TruncatedFile("acquisition samples extend past end of file")
        samples = np.frombuffer(body, dtype="<c8", count=coil_count * num_samples, offset=pos)
        pos += sample_bytes
        acquisitions.append(
            Acquisition(
                flags=flags,
                coil_count=coil_count,
                num_samples=num_samples,
                ky_index=ky_index,
                samples=samples.copy(),
            )
        )
    if pos != len(body):
        raise InvariantViolation(f"{len(body) - pos} unconsumed bytes before digest")

    acquisitions.sort(key=lambda a: a.ky_index)
    dataset = RawDataset(header=header, acquisitions=acquisitions)
    report = validate_dataset(dataset)
    if report:
        raise InvariantViolation("; ".join(report))
    return dataset


def content_hash(container_bytes: bytes) -> bytes:
    """SHA-256 of the full container; used for content addressing."""
    return hashlib.sha256(container_bytes).digest()
