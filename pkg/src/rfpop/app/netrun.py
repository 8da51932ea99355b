"""Socket endpoints: a reader server and a tag client.

Both sides speak the length-prefixed frame protocol from `rfpop.app.wire`.
The reader serves one session per connection: it opens with the round-0
challenge, relays protocol rounds, and reports its verdict as a reader-result
frame (followed by a credential frame when an extended-mode session accepts).
The tag client answers rounds, reports its own verdict as a tag-result frame,
and persists its updated state back to its key file.

Timeouts are configured in ticks; the socket layer maps one tick to
`TICK_SECONDS` of wall-clock time.  A peer that stalls past the budget, closes
mid-frame, or violates framing loses the session: the reader records o_R = 0
exactly as it would for a radio timeout.
"""

from __future__ import annotations

import socket
from typing import Callable, Optional

from rfpop.counterexample import CexProtocol
from rfpop.errors import FrameError
from rfpop.ma import MaProtocol
from rfpop.model.database import ReaderDatabase
from rfpop.model.session import Reader, Tag
from rfpop.pop import PopProtocol, cred_gen
from rfpop.primitives.rng import Rng

from rfpop.app.config import Config
from rfpop.app.dbfile import DbFileData, append_journal, load_db, load_tag, save_tag
from rfpop.app.wire import (
    ROUND_TYPES,
    TYPE_CREDENTIAL,
    TYPE_RESULT_READER,
    TYPE_RESULT_TAG,
    Frame,
    frame_for_msg,
    msg_from_frame,
    read_frame,
    result_frame,
    result_value,
)

TICK_SECONDS = 0.05


def protocol_for(config: Config, reader_signer=None):
    if config.mode == "ma":
        return MaProtocol(config.ma_params())
    if config.mode == "cex":
        return CexProtocol(config.ma_params())
    return PopProtocol(config.pop_params(), reader_signer)


def reader_from_file(db_path: str) -> tuple[DbFileData, Reader]:
    """Rebuild a live reader from a database file at its latest journaled state."""
    data = load_db(db_path)
    protocol = protocol_for(data.config, data.reader_signer)
    db = ReaderDatabase(list(data.current().values()))
    return data, Reader(protocol, db, reader_id=data.reader_id)


def _send(conn, frame: Frame):
    conn.sendall(frame.encode())


def _try_send(conn, frame: Frame):
    try:
        conn.sendall(frame.encode())
    except OSError:
        pass


def serve_reader(
    db_path: str,
    *,
    host: Optional[str] = None,
    port: Optional[int] = None,
    sessions: int = 1,
    rng: Optional[Rng] = None,
    session_mode: Optional[str] = None,
    announce: Callable[[str], None] = print,
    ready: Optional[Callable[[int], None]] = None,
) -> list[dict]:
    """Accept `sessions` connections, one session each, journaling every verdict."""
    data, reader = reader_from_file(db_path)
    config = data.config
    if rng is None:
        rng = Rng(config.seed).spawn("net-reader")
    bind_host = host if host is not None else config.host
    bind_port = port if port is not None else config.port
    base_j = len(data.journal)
    results = []
    with socket.create_server((bind_host, bind_port)) as server:
        actual_port = server.getsockname()[1]
        announce(f"reader listening on {bind_host}:{actual_port}")
        if ready is not None:
            ready(actual_port)
        for _ in range(sessions):
            conn, _peer = server.accept()
            with conn:
                conn.settimeout(config.timeout_ticks * TICK_SECONDS)
                summary = _serve_one(reader, conn, rng, session_mode, config, db_path, base_j)
            announce(
                "session {j}: o_R={o_reader} o_T={o_tag} via_step={via_step}".format(**summary)
            )
            results.append(summary)
    return results


def _serve_one(
    reader: Reader,
    conn,
    rng: Rng,
    session_mode: Optional[str],
    config: Config,
    db_path: str,
    base_j: int,
) -> dict:
    sid, challenge = reader.start(rng, mode=session_mode)
    _send(conn, frame_for_msg(sid, challenge))
    o_reader = None
    o_tag = None
    cred = None
    while o_reader is None or o_tag is None:
        try:
            frame = read_frame(conn)
        except (FrameError, OSError):
            # Stall, disconnect, or framing violation: score it as a timeout.
            if o_reader is None:
                o_reader = reader.timeout().output
                _try_send(conn, result_frame(TYPE_RESULT_READER, sid.to_bytes(), o_reader))
            break
        if frame.msg_type in ROUND_TYPES:
            if o_reader is not None:
                continue
            f_sid, msg = msg_from_frame(frame)
            outcome = reader.step(f_sid, msg, rng)
            if outcome.msg is None and outcome.output is None:
                continue
            if outcome.msg is not None:
                _send(conn, frame_for_msg(sid, outcome.msg))
            if outcome.output is not None:
                o_reader = outcome.output
                _send(conn, result_frame(TYPE_RESULT_READER, sid.to_bytes(), o_reader))
                cred = _issue_credential(reader, config)
                if cred is not None:
                    _send(conn, Frame(TYPE_CREDENTIAL, sid.to_bytes(), cred.encode()))
        elif frame.msg_type == TYPE_RESULT_TAG:
            o_tag = result_value(frame)
        else:
            # Clients may not send reader-result or credential frames.
            if o_reader is None:
                o_reader = reader.timeout().output
                _try_send(conn, result_frame(TYPE_RESULT_READER, sid.to_bytes(), o_reader))
            break
    record = reader.history.sessions[-1]
    append_journal(db_path, config, base_j + record.j, record)
    return {
        "j": base_j + record.j,
        "sid": record.sid.to_bytes().hex(),
        "o_reader": record.o_reader,
        "o_tag": o_tag,
        "via_step": record.via_step,
        "tag_id": record.tag_id.hex() if record.tag_id else None,
        "credential": cred.encode().hex() if cred is not None else None,
    }


def _issue_credential(reader: Reader, config: Config):
    if config.mode != "mapop":
        return None
    record = reader.history.sessions[-1]
    if record.o_reader != 1 or record.mode != "pop":
        return None
    return cred_gen(config.pop_params(), reader, reader.protocol.reader_signer, record.j)


def tag_run(
    tag_path: str,
    config: Config,
    *,
    host: Optional[str] = None,
    port: Optional[int] = None,
    sessions: int = 1,
    rng: Optional[Rng] = None,
    announce: Callable[[str], None] = print,
    cred_out: Optional[str] = None,
) -> list[dict]:
    """Run `sessions` sessions against a reader server, updating the key file."""
    mode, state, key_version = load_tag(tag_path)
    if mode != config.mode:
        raise FrameError(f"tag file is for mode {mode!r} but config says {config.mode!r}")
    if rng is None:
        rng = Rng(config.seed).spawn("net-tag")
    peer_host = host if host is not None else config.host
    peer_port = port if port is not None else config.port
    timeout_s = config.timeout_ticks * TICK_SECONDS
    tag = Tag(protocol_for(config), state, config.effective_lifetime)
    tag.key_version = key_version
    results = []
    for _ in range(sessions):
        with socket.create_connection((peer_host, peer_port), timeout=timeout_s) as sock:
            result = _client_one(tag, sock, rng)
        if result["credential"] and cred_out:
            with open(cred_out, "wb") as handle:
                handle.write(bytes.fromhex(result["credential"]))
        announce("session: o_T={o_tag} o_R={o_reader}".format(**result))
        results.append(result)
    save_tag(tag_path, mode, tag.state, tag.key_version)
    return results


def _client_one(tag: Tag, sock, rng: Rng) -> dict:
    o_tag = None
    o_reader = None
    cred_hex = None
    closed = False
    while o_tag is None and not closed:
        try:
            frame = read_frame(sock)
        except (FrameError, OSError):
            break
        if frame.msg_type in ROUND_TYPES:
            f_sid, msg = msg_from_frame(frame)
            outcome = tag.step(f_sid, msg, rng)
            if outcome.msg is not None:
                _send(sock, frame_for_msg(f_sid, outcome.msg))
            if outcome.output is not None:
                o_tag = outcome.output
                _send(sock, result_frame(TYPE_RESULT_TAG, f_sid.to_bytes(), o_tag))
        elif frame.msg_type == TYPE_RESULT_READER:
            o_reader = result_value(frame)
        elif frame.msg_type == TYPE_CREDENTIAL:
            cred_hex = frame.payload.hex()
    # The reader's verdict (and any credential) may still be in flight.
    while not closed and (o_reader is None or cred_hex is None):
        try:
            frame = read_frame(sock)
        except (FrameError, OSError):
            closed = True
            break
        if frame.msg_type == TYPE_RESULT_READER:
            o_reader = result_value(frame)
        elif frame.msg_type == TYPE_CREDENTIAL:
            cred_hex = frame.payload.hex()
    return {"o_tag": o_tag, "o_reader": o_reader, "credential": cred_hex}
