"""Reader database files and per-tag key files.

A database file starts with the magic ``RFPOP1``, a canonical-JSON metadata
block (config, reader identity, reader signing key, public-key directory), and
the initial reader records.  After the header the file is an append-only
journal: one entry per terminated session recording the verdict and the
records that session changed.  Replaying the journal up to entry `j`
reproduces the exact database state after session `j`, so old snapshots stay
loadable for credential audits.

Records are stored as fixed-order length-prefixed fields (4-byte big-endian
prefixes, since K-time verifying keys can be large).  Counters are stored as
fixed-width big-endian integers of the counter length, so a save/load/save
round trip is byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

from rfpop.counterexample import CexReaderRecord, CexTagState
from rfpop.errors import FrameError, UnknownSnapshot
from rfpop.ma import MaParams, MaReaderRecord, MaTagState, index_for
from rfpop.model.database import SessionRecord
from rfpop.pop import IMPL_KTIME, KeyDirectory, PopParams, PopReaderRecord, PopTagState
from rfpop.primitives.bitstring import BitString
from rfpop.primitives.sig import FULLTIME, KTIME, VerifyKey, signer_from_dict

from rfpop.app.config import Config, config_from_dict

MAGIC = b"RFPOP1"
_U32 = struct.Struct(">I")
_JOURNAL_MARK = b"J"


def _pack_fields(fields: list[bytes]) -> bytes:
    out = [_U32.pack(len(fields))]
    for blob in fields:
        out.append(_U32.pack(len(blob)))
        out.append(blob)
    return b"".join(out)


class _Cursor:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if self.remaining < n:
            raise FrameError("database file truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def fields(self) -> list[bytes]:
        return [self.blob() for _ in range(self.u32())]


def _sig_scheme(impl: str) -> str:
    return KTIME if impl == IMPL_KTIME else FULLTIME


def record_fields(mode: str, params, rec) -> list[tuple[str, bytes]]:
    """Named byte fields of one reader record, in storage order.

    The byte-size tables sum exactly these field lengths, so the encoders and
    the reported sizes cannot drift apart.
    """
    ctr_bytes = _ctr_width(params)
    if mode == "mapop":
        return [
            ("index", rec.index.to_bytes()),
            ("key", rec.key.to_bytes()),
            ("pop_key", rec.pop_key.to_bytes()),
            ("ctr", rec.ctr.to_bytes(ctr_bytes, "big")),
            ("tag_id", rec.tag_id.to_bytes()),
            ("verify_key", rec.verify_key.data),
        ]
    # Plain readers derive the index from (key, ctr); the counterexample
    # protocol has no index at all.  Either way only three fields persist.
    return [
        ("tag_id", rec.tag_id.to_bytes()),
        ("key", rec.key.to_bytes()),
        ("ctr", rec.ctr.to_bytes(ctr_bytes, "big")),
    ]


def tag_fields(mode: str, params, state) -> list[tuple[str, bytes]]:
    """Named secret fields a tag stores, in storage order."""
    ctr_bytes = _ctr_width(params)
    if mode == "mapop":
        return [
            ("key", state.ma.key.to_bytes()),
            ("ctr", state.ma.ctr.to_bytes(ctr_bytes, "big")),
            ("pop_key", state.pop_key.to_bytes()),
            ("signer_seed", bytes.fromhex(state.signer.to_dict()["seed"])),
        ]
    return [
        ("key", state.key.to_bytes()),
        ("ctr", state.ctr.to_bytes(ctr_bytes, "big")),
    ]


def _ctr_width(params) -> int:
    ma = params.ma if isinstance(params, PopParams) else params
    return ma.out_bits // 8


def _interior(params) -> MaParams:
    return params.ma if isinstance(params, PopParams) else params


def encode_record(mode: str, params, rec) -> bytes:
    return _pack_fields([blob for _, blob in record_fields(mode, params, rec)])


def decode_record(mode: str, params, impl: str, cursor: _Cursor):
    fields = cursor.fields()
    ma = _interior(params)
    if mode == "mapop":
        if len(fields) != 6:
            raise FrameError(f"extended reader record needs 6 fields, got {len(fields)}")
        index, key, pop_key, ctr, tag_id, vk = fields
        return PopReaderRecord(
            tag_id=BitString.from_bytes(tag_id),
            key=BitString.from_bytes(key),
            ctr=int.from_bytes(ctr, "big"),
            index=BitString.from_bytes(index),
            pop_key=BitString.from_bytes(pop_key),
            verify_key=VerifyKey(_sig_scheme(impl), vk),
        )
    if len(fields) != 3:
        raise FrameError(f"reader record needs 3 fields, got {len(fields)}")
    tag_id, key, ctr = fields
    key_bits = BitString.from_bytes(key)
    ctr_val = int.from_bytes(ctr, "big")
    if mode == "cex":
        return CexReaderRecord(
            tag_id=BitString.from_bytes(tag_id), key=key_bits, ctr=ctr_val
        )
    return MaReaderRecord(
        tag_id=BitString.from_bytes(tag_id),
        key=key_bits,
        ctr=ctr_val,
        index=index_for(ma, key_bits, ctr_val),
    )


@dataclass
class JournalEntry:
    j: int
    sid: bytes
    o_reader: int
    via_step: int
    mode: str
    tag_id: Optional[bytes]
    changes: dict[bytes, object] = field(default_factory=dict)


@dataclass
class DbFileData:
    config: Config
    reader_id: bytes
    initial: dict[bytes, object]
    journal: list[JournalEntry]
    reader_signer: Optional[object] = None
    directory: Optional[KeyDirectory] = None

    def params(self):
        return self.config.pop_params() if self.config.mode == "mapop" else self.config.ma_params()

    def snapshot(self, j: int) -> dict[bytes, object]:
        """Database contents right after journaled session `j` (0 = initial)."""
        if not 0 <= j <= len(self.journal):
            raise UnknownSnapshot(f"snapshot {j} outside 0..{len(self.journal)}")
        state = dict(self.initial)
        for entry in self.journal[:j]:
            state.update(entry.changes)
        return state

    def current(self) -> dict[bytes, object]:
        return self.snapshot(len(self.journal))


def save_db(path: str, config: Config, records, reader_id: bytes = b"reader-0",
            reader_signer=None, directory: Optional[KeyDirectory] = None):
    """Write a fresh database file (header and initial records, no journal)."""
    meta = {"config": config.to_dict(), "reader_id": reader_id.hex()}
    if reader_signer is not None:
        meta["reader_signer"] = reader_signer.to_dict()
    if directory is not None:
        meta["directory"] = {
            party.hex(): {"scheme": vk.scheme, "data": vk.data.hex()}
            for party, vk in sorted(directory.entries.items())
        }
    meta_blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("ascii")
    params = config.pop_params() if config.mode == "mapop" else config.ma_params()
    ordered = sorted(records, key=lambda r: r.tag_id.to_bytes())
    body = [MAGIC, _U32.pack(len(meta_blob)), meta_blob, _U32.pack(len(ordered))]
    body += [encode_record(config.mode, params, rec) for rec in ordered]
    with open(path, "wb") as handle:
        handle.write(b"".join(body))


def load_db(path: str) -> DbFileData:
    with open(path, "rb") as handle:
        data = handle.read()
    cursor = _Cursor(data)
    if cursor.take(len(MAGIC)) != MAGIC:
        raise FrameError(f"{path} is not a reader database (bad magic)")
    try:
        meta = json.loads(cursor.blob().decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"corrupt metadata block: {exc}") from exc
    config = config_from_dict(meta["config"])
    reader_id = bytes.fromhex(meta["reader_id"])
    params = config.pop_params() if config.mode == "mapop" else config.ma_params()
    initial = {}
    for _ in range(cursor.u32()):
        rec = decode_record(config.mode, params, config.impl, cursor)
        initial[rec.tag_id.to_bytes()] = rec
    signer = signer_from_dict(meta["reader_signer"]) if "reader_signer" in meta else None
    directory = None
    if "directory" in meta:
        entries = {
            bytes.fromhex(party): VerifyKey(doc["scheme"], bytes.fromhex(doc["data"]))
            for party, doc in meta["directory"].items()
        }
        directory = KeyDirectory(entries=entries)
    journal = []
    while cursor.remaining:
        journal.append(_read_journal_entry(cursor, config, params))
        expect = len(journal)
        if journal[-1].j != expect:
            raise FrameError(f"journal entry {expect} carries j={journal[-1].j}")
    return DbFileData(
        config=config,
        reader_id=reader_id,
        initial=initial,
        journal=journal,
        reader_signer=signer,
        directory=directory,
    )


def _read_journal_entry(cursor: _Cursor, config: Config, params) -> JournalEntry:
    if cursor.take(1) != _JOURNAL_MARK:
        raise FrameError("corrupt journal marker")
    j = cursor.u32()
    sid = cursor.take(16)
    o_reader = cursor.take(1)[0]
    via_step = cursor.take(1)[0]
    mode = cursor.blob().decode("ascii")
    tag_blob = cursor.blob()
    tag_id = tag_blob or None
    changes = {}
    for _ in range(cursor.u32()):
        rec = decode_record(config.mode, params, config.impl, cursor)
        changes[rec.tag_id.to_bytes()] = rec
    return JournalEntry(
        j=j, sid=sid, o_reader=o_reader, via_step=via_step, mode=mode,
        tag_id=tag_id, changes=changes,
    )


def append_journal(path: str, config: Config, j: int, session: SessionRecord):
    """Append one terminated session to the file's snapshot journal."""
    params = config.pop_params() if config.mode == "mapop" else config.ma_params()
    parts = [
        _JOURNAL_MARK,
        _U32.pack(j),
        session.sid.to_bytes(),
        bytes([session.o_reader & 1]),
        bytes([session.via_step or 0]),
    ]
    mode_blob = (session.mode or "").encode("ascii")
    parts += [_U32.pack(len(mode_blob)), mode_blob]
    tag_blob = session.tag_id or b""
    parts += [_U32.pack(len(tag_blob)), tag_blob]
    changed = sorted(session.delta.items())
    parts.append(_U32.pack(len(changed)))
    parts += [encode_record(config.mode, params, rec) for _, rec in changed]
    with open(path, "ab") as handle:
        handle.write(b"".join(parts))


def db_snapshot_load(path: str, j: int) -> dict[bytes, object]:
    """Load the reader records exactly as they stood after journaled session `j`."""
    return load_db(path).snapshot(j)


def save_tag(path: str, mode: str, state, key_version: int = 0):
    """Write one tag's secrets as a JSON key file."""
    if mode == "mapop":
        doc = {
            "mode": mode,
            "tag_id": state.ma.tag_id.to_bytes().hex(),
            "key": state.ma.key.to_bytes().hex(),
            "ctr": state.ma.ctr,
            "pop_key": state.pop_key.to_bytes().hex(),
            "signer": state.signer.to_dict(),
        }
    else:
        doc = {
            "mode": mode,
            "tag_id": state.tag_id.to_bytes().hex(),
            "key": state.key.to_bytes().hex(),
            "ctr": state.ctr,
        }
        if mode == "cex":
            doc["st"] = state.st
    doc["key_version"] = key_version
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_tag(path: str):
    """Read a tag key file back into (mode, state, key_version)."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    mode = doc["mode"]
    tag_id = BitString.from_bytes(bytes.fromhex(doc["tag_id"]))
    key = BitString.from_bytes(bytes.fromhex(doc["key"]))
    if mode == "mapop":
        state = PopTagState(
            ma=MaTagState(tag_id=tag_id, key=key, ctr=doc["ctr"]),
            pop_key=BitString.from_bytes(bytes.fromhex(doc["pop_key"])),
            signer=signer_from_dict(doc["signer"]),
        )
    elif mode == "cex":
        state = CexTagState(tag_id=tag_id, key=key, ctr=doc["ctr"], st=doc.get("st", 0))
    else:
        state = MaTagState(tag_id=tag_id, key=key, ctr=doc["ctr"])
    return mode, state, doc.get("key_version", 0)
