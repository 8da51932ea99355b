"""Reader-side database with per-session snapshot history.

The database maps tag identities to protocol-specific records. Records are
mutable dataclasses whose fields are immutable values; protocols mutate a
record in place and then report the update so the index map and the current
session's delta stay consistent.

Snapshots are deltas: for each terminated session the history stores the
records that session changed (their post-session values). The database state
after any session j is reconstructed by replaying deltas 1..j onto the
initial records; j=0 is the state right after setup.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from rfpop.errors import UnknownSnapshot
from rfpop.model.types import Msg
from rfpop.primitives.bitstring import BitString


def _clone(record):
    return dataclasses.replace(record)


class ReaderDatabase:
    """Current records plus the index map used for constant-time sync lookup."""

    def __init__(self, records):
        self._records: dict[bytes, object] = {}
        self._by_index: dict[bytes, list[bytes]] = {}
        self._dirty: set[bytes] = set()
        for rec in records:
            key = rec.tag_id.to_bytes()
            if key in self._records:
                raise ValueError(f"duplicate tag id {key.hex()}")
            self._records[key] = rec
            self._index_insert(rec)

    def _index_insert(self, rec):
        idx = getattr(rec, "index", None)
        if idx is not None:
            self._by_index.setdefault(idx.to_bytes(), []).append(rec.tag_id.to_bytes())

    def _index_remove(self, rec_id: bytes, idx: Optional[BitString]):
        if idx is None:
            return
        bucket = self._by_index.get(idx.to_bytes())
        if bucket and rec_id in bucket:
            bucket.remove(rec_id)
            if not bucket:
                del self._by_index[idx.to_bytes()]

    def __len__(self) -> int:
        return len(self._records)

    def ids(self) -> list[bytes]:
        return sorted(self._records)

    def get(self, tag_id: bytes):
        return self._records[tag_id]

    def records_ascending(self):
        for key in self.ids():
            yield self._records[key]

    def candidates_for_index(self, index: BitString) -> list:
        """Records whose stored index equals `index`, ascending by tag id."""
        ids = sorted(self._by_index.get(index.to_bytes(), []))
        return [self._records[i] for i in ids]

    def record_updated(self, rec, old_index: Optional[BitString]):
        """Report an in-place record mutation (fixes the index map, marks the
        record dirty for the current session's snapshot delta)."""
        key = rec.tag_id.to_bytes()
        if key not in self._records:
            raise KeyError(f"unknown tag id {key.hex()}")
        new_index = getattr(rec, "index", None)
        if old_index != new_index:
            self._index_remove(key, old_index)
            self._index_insert(rec)
        self._dirty.add(key)

    def take_delta(self) -> dict[bytes, object]:
        """Post-session values of the records this session changed."""
        delta = {key: _clone(self._records[key]) for key in self._dirty}
        self._dirty.clear()
        return delta

    def clone_records(self) -> dict[bytes, object]:
        return {key: _clone(rec) for key, rec in self._records.items()}


@dataclass
class SessionRecord:
    """Everything the reader keeps about one terminated session."""

    j: int
    sid: BitString
    o_reader: int
    tag_id: Optional[bytes]
    mode: str
    messages: list[Msg]
    coins: dict[str, bytes]
    delta: dict[bytes, object]
    via_step: Optional[int] = None
    note: str = ""


@dataclass
class History:
    """Initial database image plus the append-only per-session deltas."""

    initial: dict[bytes, object]
    sessions: list[SessionRecord] = field(default_factory=list)
    sid_to_j: dict[bytes, int] = field(default_factory=dict)

    def append(self, record: SessionRecord):
        if record.j != len(self.sessions) + 1:
            raise ValueError("session records must be appended in order")
        self.sessions.append(record)
        self.sid_to_j.setdefault(record.sid.to_bytes(), record.j)

    def session(self, j: int) -> SessionRecord:
        if not 1 <= j <= len(self.sessions):
            raise UnknownSnapshot(f"no session {j}; have 1..{len(self.sessions)}")
        return self.sessions[j - 1]

    def j_for_sid(self, sid: BitString) -> Optional[int]:
        return self.sid_to_j.get(sid.to_bytes())

    def db_at(self, j: int) -> dict[bytes, object]:
        """Database image after session j (j=0: right after setup)."""
        if not 0 <= j <= len(self.sessions):
            raise UnknownSnapshot(f"no snapshot {j}; have 0..{len(self.sessions)}")
        image = {key: _clone(rec) for key, rec in self.initial.items()}
        for record in self.sessions[:j]:
            for key, rec in record.delta.items():
                image[key] = _clone(rec)
        return image
