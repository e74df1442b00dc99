"""Sealed transfer of container bytes plus a virtual-time network model.

Encryption is AES-256-GCM (one primitive covering both confidentiality and
integrity). Network behavior is simulated, never throttled: a profile turns a
byte count into seconds via latency + overhead + 8 * bytes / rate. The
built-in profiles reproduce the reference transfer table: 10 GB takes 816 s
on LOCAL_4G and 0.01 s on CLOUD_6G. The 4G rate is back-derived from the
816 s figure (~98 Mbit/s); the table's nominal "100 MB/s" label would give
100 s instead, so the time is treated as authoritative.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import queue
import secrets
import threading
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

KEY_BYTES = 32
NONCE_BYTES = 12
TAG_BYTES = 16


class TransportError(Exception):
    pass


class BadKeyLength(TransportError):
    pass


class BadNonceLength(TransportError):
    pass


class AuthenticationFailure(TransportError):
    """Nonce, ciphertext, or tag was altered, or the key is wrong."""


@dataclass(frozen=True)
class NetworkProfile:
    name: str
    rate_bits_per_s: float
    latency_s: float = 0.0
    per_file_overhead_s: float = 0.0

    def __post_init__(self):
        if self.rate_bits_per_s <= 0:
            raise TransportError(f"rate must be positive, got {self.rate_bits_per_s}")
        if self.latency_s < 0 or self.per_file_overhead_s < 0:
            raise TransportError("latency and overhead must be >= 0")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rate_bits_per_s": self.rate_bits_per_s,
            "latency_s": self.latency_s,
            "per_file_overhead_s": self.per_file_overhead_s,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "NetworkProfile":
        return cls(
            name=spec["name"],
            rate_bits_per_s=float(spec["rate_bits_per_s"]),
            latency_s=float(spec.get("latency_s", 0.0)),
            per_file_overhead_s=float(spec.get("per_file_overhead_s", 0.0)),
        )


LOCAL_4G = NetworkProfile(name="LOCAL_4G", rate_bits_per_s=9.804e7, latency_s=0.05)
CLOUD_6G = NetworkProfile(name="CLOUD_6G", rate_bits_per_s=8e12, latency_s=0.0)
BUILTIN_PROFILES = {p.name: p for p in (LOCAL_4G, CLOUD_6G)}


def load_profiles(path) -> dict[str, NetworkProfile]:
    """Built-ins plus any profiles from a JSON config file (a list of profile
    objects); file entries may override built-ins by name."""
    profiles = dict(BUILTIN_PROFILES)
    with open(path) as fh:
        for spec in json.load(fh):
            profile = NetworkProfile.from_dict(spec)
            profiles[profile.name] = profile
    return profiles


@dataclass(frozen=True)
class SealedBlob:
    """AEAD envelope. Wire layout is nonce || ciphertext || tag, no framing."""

    nonce: bytes
    ciphertext: bytes
    auth_tag: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + self.ciphertext + self.auth_tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedBlob":
        if len(data) < NONCE_BYTES + TAG_BYTES:
            raise AuthenticationFailure(
                f"blob of {len(data)} bytes is shorter than nonce + tag"
            )
        return cls(
            nonce=data[:NONCE_BYTES],
            ciphertext=data[NONCE_BYTES:-TAG_BYTES],
            auth_tag=data[-TAG_BYTES:],
        )


@dataclass(frozen=True)
class TransferReceipt:
    content_hash: bytes
    byte_count: int
    simulated_seconds: float
    profile_name: str


def _check_key(key: bytes) -> None:
    if len(key) != KEY_BYTES:
        raise BadKeyLength(f"key must be {KEY_BYTES} bytes, got {len(key)}")


def seal(key: bytes, plaintext: bytes, nonce: bytes) -> SealedBlob:
    """AES-256-GCM encrypt with empty associated data.

    Caller contract: never reuse a nonce under the same key (the gateway
    derives nonces from a counter).
    """
    _check_key(key)
    if len(nonce) != NONCE_BYTES:
        raise BadNonceLength(f"nonce must be {NONCE_BYTES} bytes, got {len(nonce)}")
    out = AESGCM(key).encrypt(nonce, plaintext, None)
    return SealedBlob(nonce=nonce, ciphertext=out[:-TAG_BYTES], auth_tag=out[-TAG_BYTES:])


def unseal(key: bytes, blob: SealedBlob) -> bytes:
    """Decrypt and verify; any altered bit fails authentication."""
    _check_key(key)
    try:
        return AESGCM(key).decrypt(blob.nonce, blob.ciphertext + blob.auth_tag, None)
    except InvalidTag:
        raise AuthenticationFailure("authentication tag verification failed") from None


def estimate_transfer_time(byte_count: int, profile: NetworkProfile) -> float:
    """Seconds to move byte_count bytes under a profile (virtual time)."""
    if byte_count < 0:
        raise TransportError(f"byte_count must be >= 0, got {byte_count}")
    return profile.latency_s + profile.per_file_overhead_s + 8.0 * byte_count / profile.rate_bits_per_s


_nonce_counter = itertools.count(1)
_nonce_lock = threading.Lock()
# random session prefix keeps counter nonces from colliding across processes
_nonce_prefix = secrets.token_bytes(4)

#: Sealed uploads queued by asynchronous-mode callers; drained by tests and
#: by the gateway's background flush.
pending_uploads: "queue.Queue[tuple[SealedBlob, TransferReceipt]]" = queue.Queue()


def _next_nonce() -> bytes:
    with _nonce_lock:
        return _nonce_prefix + next(_nonce_counter).to_bytes(NONCE_BYTES - 4, "little")


def simulate_upload(
    container_bytes: bytes,
    key: bytes,
    profile: NetworkProfile,
    mode: str = "synchronous",
    nonce: bytes | None = None,
) -> TransferReceipt:
    """Validate, seal, and account for one container upload.

    The container must decode as a valid raw-data file before sealing.
    Both modes produce the same receipt (the time model is mode-independent);
    asynchronous mode additionally enqueues the sealed blob on
    `pending_uploads` instead of handing it to the caller inline.
    """
    from cloudmri.raw_format import decode_dataset

    if mode not in ("synchronous", "asynchronous"):
        raise TransportError(f"unknown mode {mode!r}")
    decode_dataset(container_bytes)
    blob = seal(key, container_bytes, nonce if nonce is not None else _next_nonce())
    receipt = TransferReceipt(
        content_hash=hashlib.sha256(container_bytes).digest(),
        byte_count=len(container_bytes),
        simulated_seconds=estimate_transfer_time(len(container_bytes), profile),
        profile_name=profile.name,
    )
    if mode == "asynchronous":
        pending_uploads.put((blob, receipt))
    return receipt
