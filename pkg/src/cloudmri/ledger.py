"""Tamper-evident audit log and declarative access control.

Every entry commits to its predecessor's digest, so a single flipped bit
anywhere in the persisted file is detectable at or before the altered entry.
The chain is single-writer (a lock serializes appends); readers always see a
prefix-consistent snapshot. Access rules are an ordered first-match-wins list
with default deny, and every decision, allowed or not, lands on the ledger.

Canonical entry serialization (all integers little-endian):

    u64 index || u64 timestamp || lp(actor_id) || lp(action)
    || resource_hash (32 raw bytes) || prev_hash (32 raw bytes)

where lp(s) is u32 byte length then UTF-8 bytes. entry_hash = SHA-256 of the
canonical bytes. The persistence file is a sequence of records, each
u32 record length then canonical bytes || entry_hash.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

ACTIONS = ("UPLOAD", "ACCESS", "RECON", "REVIEW", "MODEL_UPDATE", "DENY")
GENESIS_HASH = bytes(32)
HASH_BYTES = 32
WILDCARD = "any"


class LedgerError(Exception):
    pass


class PersistenceFailure(LedgerError):
    pass


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    timestamp: int
    actor_id: str
    action: str
    resource_hash: bytes
    prev_hash: bytes
    entry_hash: bytes


def _lp(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def canonical_entry_bytes(index: int, timestamp: int, actor_id: str, action: str,
                          resource_hash: bytes, prev_hash: bytes) -> bytes:
    if len(resource_hash) != HASH_BYTES or len(prev_hash) != HASH_BYTES:
        raise LedgerError("resource_hash and prev_hash must be 32 bytes")
    return (
        struct.pack("<Q", index)
        + struct.pack("<Q", timestamp)
        + _lp(actor_id)
        + _lp(action)
        + resource_hash
        + prev_hash
    )


def entry_digest(index: int, timestamp: int, actor_id: str, action: str,
                 resource_hash: bytes, prev_hash: bytes) -> bytes:
    return hashlib.sha256(
        canonical_entry_bytes(index, timestamp, actor_id, action, resource_hash, prev_hash)
    ).digest()


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    first_bad_index: int | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "first_bad_index": self.first_bad_index}


class Ledger:
    """Append-only hash chain persisted to one file; the file is the chain."""

    def __init__(self, path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._entries: list[LedgerEntry] = []
        self._load_error: int | None = None
        if self._path.exists():
            result, entries = _parse_file(self._path.read_bytes())
            # Load the valid prefix either way; a damaged file stays readable
            # and verifiable, but must never be extended (append-only means
            # the bad bytes cannot be removed, so the chain is dead).
            self._entries = entries
            if not result.ok:
                self._load_error = result.first_bad_index
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._path.touch()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def entries(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._entries)

    def append(self, actor_id: str, action: str, resource_hash: bytes,
               timestamp: int) -> LedgerEntry:
        """Chain and persist one entry; the write is flushed before return."""
        if action not in ACTIONS:
            raise LedgerError(f"action must be one of {ACTIONS}, got {action!r}")
        if self._load_error is not None:
            raise LedgerError(
                f"ledger failed verification at index {self._load_error}; "
                "refusing to extend a broken chain"
            )
        with self._lock:
            index = len(self._entries)
            prev_hash = self._entries[-1].entry_hash if self._entries else GENESIS_HASH
            canonical = canonical_entry_bytes(
                index, int(timestamp), actor_id, action, resource_hash, prev_hash
            )
            entry = LedgerEntry(
                index=index,
                timestamp=int(timestamp),
                actor_id=actor_id,
                action=action,
                resource_hash=resource_hash,
                prev_hash=prev_hash,
                entry_hash=hashlib.sha256(canonical).digest(),
            )
            record = canonical + entry.entry_hash
            try:
                with open(self._path, "ab") as fh:
                    fh.write(struct.pack("<I", len(record)) + record)
                    fh.flush()
            except OSError as exc:
                raise PersistenceFailure(f"ledger write failed: {exc}") from exc
            self._entries.append(entry)
            return entry

    def verify(self) -> VerifyResult:
        """Re-read the file from disk and recompute every hash and link."""
        return verify_file(self._path)


def verify_file(path) -> VerifyResult:
    try:
        data = Path(path).read_bytes()
    except OSError:
        return VerifyResult(ok=False, first_bad_index=0)
    result, _ = _parse_file(data)
    return result


def _parse_file(data: bytes) -> tuple[VerifyResult, list[LedgerEntry]]:
    entries: list[LedgerEntry] = []
    pos = 0
    index = 0
    prev_hash = GENESIS_HASH
    while pos < len(data):
        entry, pos_next = _parse_record(data, pos, index, prev_hash)
        if entry is None:
            return VerifyResult(ok=False, first_bad_index=index), entries
        entries.append(entry)
        prev_hash = entry.entry_hash
        index += 1
        pos = pos_next
    return VerifyResult(ok=True), entries


def _parse_record(data: bytes, pos: int, index: int, expected_prev: bytes):
    """Returns (entry, next_pos) or (None, pos) on any structural or
    cryptographic mismatch."""
    bad = (None, pos)
    if pos + 4 > len(data):
        return bad
    (record_len,) = struct.unpack_from("<I", data, pos)
    start = pos + 4
    end = start + record_len
    if end > len(data):
        return bad
    record = data[start:end]
    # canonical minimum: 8+8 ints, two u32 length prefixes, two 32-byte hashes
    if len(record) < 8 + 8 + 4 + 4 + HASH_BYTES + HASH_BYTES + HASH_BYTES:
        return bad
    cursor = 0
    entry_index, timestamp = struct.unpack_from("<QQ", record, cursor)
    cursor += 16
    strings = []
    for _ in range(2):
        if cursor + 4 > len(record):
            return bad
        (str_len,) = struct.unpack_from("<I", record, cursor)
        cursor += 4
        if cursor + str_len > len(record):
            return bad
        try:
            strings.append(record[cursor : cursor + str_len].decode("utf-8"))
        except UnicodeDecodeError:
            return bad
        cursor += str_len
    actor_id, action = strings
    if cursor + 3 * HASH_BYTES != len(record):
        return bad
    resource_hash = record[cursor : cursor + HASH_BYTES]
    prev_hash = record[cursor + HASH_BYTES : cursor + 2 * HASH_BYTES]
    stored_hash = record[cursor + 2 * HASH_BYTES :]
    if entry_index != index or prev_hash != expected_prev:
        return bad
    recomputed = entry_digest(entry_index, timestamp, actor_id, action, resource_hash, prev_hash)
    if recomputed != stored_hash:
        return bad
    entry = LedgerEntry(
        index=entry_index,
        timestamp=timestamp,
        actor_id=actor_id,
        action=action,
        resource_hash=resource_hash,
        prev_hash=prev_hash,
        entry_hash=stored_hash,
    )
    return entry, end


# -- access control -----------------------------------------------------------

RESOURCE_CLASSES = ("rawdata", "image", "report", "model")


@dataclass(frozen=True)
class AccessRule:
    """(role, action, resource_class, effect); "any" wildcards a field."""

    actor_role: str
    action: str
    resource_class: str
    effect: str  # allow | deny

    def matches(self, role: str, action: str, resource_class: str) -> bool:
        return (
            self.actor_role in (WILDCARD, role)
            and self.action in (WILDCARD, action)
            and self.resource_class in (WILDCARD, resource_class)
        )


@dataclass
class AccessPolicy:
    rules: list[AccessRule]
    roles: dict[str, str]

    @classmethod
    def from_dict(cls, spec: dict) -> "AccessPolicy":
        rules = [
            AccessRule(
                actor_role=r["actor_role"],
                action=r["action"],
                resource_class=r["resource_class"],
                effect=r["effect"],
            )
            for r in spec.get("rules", [])
        ]
        for rule in rules:
            if rule.effect not in ("allow", "deny"):
                raise LedgerError(f"rule effect must be allow or deny, got {rule.effect!r}")
        return cls(rules=rules, roles=dict(spec.get("roles", {})))

    def to_dict(self) -> dict:
        return {
            "rules": [
                {
                    "actor_role": r.actor_role,
                    "action": r.action,
                    "resource_class": r.resource_class,
                    "effect": r.effect,
                }
                for r in self.rules
            ],
            "roles": dict(self.roles),
        }


def check_access(policy: AccessPolicy, actor_id: str, action: str,
                 resource_class: str, timestamp: int, ledger: Ledger,
                 resource_hash: bytes | None = None) -> bool:
    """First matching rule wins; unmapped actors and unmatched requests are
    denied. The decision itself is appended to the ledger (the requested
    action on allow, DENY otherwise), so every decision leaves a trace."""
    if resource_hash is None:
        resource_hash = hashlib.sha256(resource_class.encode("utf-8")).digest()
    role = policy.roles.get(actor_id)
    allowed = False
    if role is not None:
        for rule in policy.rules:
            if rule.matches(role, action, resource_class):
                allowed = rule.effect == "allow"
                break
    ledger.append(
        actor_id=actor_id,
        action=action if allowed else "DENY",
        resource_hash=resource_hash,
        timestamp=timestamp,
    )
    return allowed
