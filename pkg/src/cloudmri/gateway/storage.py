"""Content-addressed object store: object id = SHA-256 hex of the bytes.

Objects are immutable once written; writing the same bytes twice is a no-op.
A sidecar JSON per object records kind and creation time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

OBJECT_KINDS = ("rawdata", "image", "report")


class StorageError(Exception):
    pass


class ObjectNotFound(StorageError):
    pass


@dataclass(frozen=True)
class StoredObject:
    object_id: str
    kind: str
    data: bytes
    created_at: float


class ObjectStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _data_path(self, object_id: str) -> Path:
        return self.root / object_id

    def _meta_path(self, object_id: str) -> Path:
        return self.root / f"{object_id}.meta.json"

    def put(self, data: bytes, kind: str, created_at: float = 0.0) -> str:
        if kind not in OBJECT_KINDS:
            raise StorageError(f"kind must be one of {OBJECT_KINDS}, got {kind!r}")
        object_id = hashlib.sha256(data).hexdigest()
        path = self._data_path(object_id)
        if not path.exists():
            try:
                path.write_bytes(data)
                self._meta_path(object_id).write_text(
                    json.dumps({"kind": kind, "created_at": created_at})
                )
            except OSError as exc:
                raise StorageError(f"object write failed: {exc}") from exc
        return object_id

    def exists(self, object_id: str) -> bool:
        return self._data_path(object_id).is_file()

    def get(self, object_id: str) -> StoredObject:
        path = self._data_path(object_id)
        if not path.is_file():
            raise ObjectNotFound(f"no object {object_id!r}")
        meta = {"kind": "rawdata", "created_at": 0.0}
        meta_path = self._meta_path(object_id)
        if meta_path.is_file():
            meta.update(json.loads(meta_path.read_text()))
        return StoredObject(
            object_id=object_id,
            kind=meta["kind"],
            data=path.read_bytes(),
            created_at=meta["created_at"],
        )

    def object_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir()
            if p.is_file() and not p.name.endswith(".meta.json")
        )

    def audit(self) -> list[str]:
        """Object ids whose stored bytes no longer hash to their id."""
        return [
            object_id
            for object_id in self.object_ids()
            if hashlib.sha256(self._data_path(object_id).read_bytes()).hexdigest() != object_id
        ]
