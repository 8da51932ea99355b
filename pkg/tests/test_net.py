"""Socket reader server and tag client over loopback."""

import queue
import socket
import threading
import time

import pytest

from rfpop.app.config import Config
from rfpop.app.dbfile import load_db, load_tag, save_db, save_tag
from rfpop.app.netrun import TICK_SECONDS, serve_reader, tag_run
from rfpop.app.wire import (
    TYPE_RESULT_READER,
    read_frame,
    result_frame,
    result_value,
)
from rfpop.errors import FrameError
from rfpop.model.session import run_honest_session
from rfpop.pop import Credential, cred_gen, cred_veri
from rfpop.primitives.rng import Rng


def deploy(tmp_path, config):
    """Write a reader database plus one key file per tag, as setup would."""
    system = config.build_system(Rng(config.seed), config.tags)
    db_path = str(tmp_path / "reader.db")
    save_db(
        db_path,
        config,
        list(system.reader.db.records_ascending()),
        reader_id=system.reader.reader_id,
        reader_signer=system.reader_signer,
        directory=system.directory,
    )
    tag_paths = []
    for i, tag_id in enumerate(system.tag_ids()):
        path = str(tmp_path / f"tag-{i:03d}.json")
        save_tag(path, config.mode, system.tag(tag_id).state)
        tag_paths.append(path)
    return db_path, tag_paths, system


def start_server(db_path, *, sessions, rng=None, session_mode=None):
    """Run serve_reader on a free loopback port in a daemon thread."""
    ports = queue.Queue()
    box = {}

    def run():
        try:
            box["results"] = serve_reader(
                db_path,
                host="127.0.0.1",
                port=0,
                sessions=sessions,
                rng=rng,
                session_mode=session_mode,
                announce=lambda line: None,
                ready=ports.put,
            )
        except BaseException as exc:
            box["error"] = exc
            ports.put(None)

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    port = ports.get(timeout=5)
    assert port is not None, repr(box.get("error"))
    box["thread"] = thread
    box["port"] = port
    return box


def finish(box, timeout=10):
    box["thread"].join(timeout)
    assert not box["thread"].is_alive()
    if "error" in box:
        raise box["error"]
    return box["results"]


def run_client(box, tag_path, config, **kwargs):
    return tag_run(
        tag_path,
        config,
        host="127.0.0.1",
        port=box["port"],
        announce=lambda line: None,
        **kwargs,
    )


def test_ma_sessions_over_loopback(tmp_path):
    config = Config(mode="ma", tags=1, seed="net-ma")
    db_path, tag_paths, system = deploy(tmp_path, config)
    box = start_server(db_path, sessions=3)
    client = run_client(box, tag_paths[0], config, sessions=3)
    server = finish(box)

    assert [r["j"] for r in server] == [1, 2, 3]
    for summary in server:
        assert summary["o_reader"] == 1
        assert summary["via_step"] == 1
        assert summary["o_tag"] == 1
        assert summary["tag_id"] == system.first_tag_id().hex()
        assert summary["credential"] is None
    assert client == [{"o_tag": 1, "o_reader": 1, "credential": None}] * 3

    data = load_db(db_path)
    assert len(data.journal) == 3
    assert data.current()[system.first_tag_id()].ctr == 4
    mode, state, _version = load_tag(tag_paths[0])
    assert mode == "ma"
    assert state.ctr == 4


def test_mapop_session_issues_verifiable_credential(tmp_path):
    config = Config(mode="mapop", tags=2, seed="net-pop")
    db_path, tag_paths, system = deploy(tmp_path, config)
    cred_path = tmp_path / "cred.bin"
    box = start_server(db_path, sessions=1)
    client = run_client(box, tag_paths[0], config, sessions=1, cred_out=str(cred_path))
    server = finish(box)

    assert server[0]["o_reader"] == 1
    assert client[0]["o_tag"] == 1
    assert client[0]["credential"] == server[0]["credential"]
    assert cred_path.read_bytes().hex() == server[0]["credential"]

    data = load_db(db_path)
    assert data.journal[0].mode == "pop"
    cred = Credential.decode(cred_path.read_bytes())
    assert cred_veri(config.pop_params(), data.directory, cred) == 1
    assert cred.tag_id == system.first_tag_id()


def test_session_mode_override_runs_plain_rounds(tmp_path):
    config = Config(mode="mapop", tags=1, seed="net-plain")
    db_path, tag_paths, _system = deploy(tmp_path, config)
    box = start_server(db_path, sessions=1, session_mode="ma")
    client = run_client(box, tag_paths[0], config, sessions=1)
    server = finish(box)

    assert server[0]["o_reader"] == 1
    assert server[0]["credential"] is None
    assert client[0] == {"o_tag": 1, "o_reader": 1, "credential": None}
    assert load_db(db_path).journal[0].mode == "ma"


def test_shared_rng_reproduces_in_memory_transcript(tmp_path):
    """One Rng shared by both endpoints replays the in-memory session exactly.

    The wire protocol is strict ping-pong, so even across threads the two
    parties consume randomness in the same order as a direct relay.  The
    issued credential signs over transcript-derived digests, so byte equality
    here pins the whole exchange, not just the verdicts.
    """
    config = Config(mode="mapop", tags=1, seed="net-equiv")
    db_path, tag_paths, _system = deploy(tmp_path, config)
    twin = config.build_system(Rng(config.seed), config.tags)

    shared = Rng("net-shared-draws")
    box = start_server(db_path, sessions=1, rng=shared)
    client = run_client(box, tag_paths[0], config, sessions=1, rng=shared)
    server = finish(box)

    replay_rng = Rng("net-shared-draws")
    run_honest_session(twin.reader, twin.tag(twin.first_tag_id()), replay_rng)
    record = twin.reader.history.sessions[-1]
    expected_cred = cred_gen(
        config.pop_params(), twin.reader, twin.reader.protocol.reader_signer, 1
    )

    assert server[0]["sid"] == record.sid.to_bytes().hex()
    assert server[0]["o_reader"] == record.o_reader == 1
    assert server[0]["via_step"] == record.via_step
    assert server[0]["tag_id"] == record.tag_id.hex()
    assert server[0]["credential"] == expected_cred.encode().hex()
    assert client[0]["o_tag"] == 1


def test_stalled_client_scores_reader_zero(tmp_path):
    config = Config(mode="ma", tags=1, seed="net-stall", timeout_ticks=2)
    db_path, tag_paths, system = deploy(tmp_path, config)
    box = start_server(db_path, sessions=1)

    with socket.create_connection(("127.0.0.1", box["port"]), timeout=5) as sock:
        challenge = read_frame(sock)
        assert challenge.msg_type == 0x01
        time.sleep(6 * TICK_SECONDS)  # stay silent past the 2-tick budget
        verdict = read_frame(sock)
    assert verdict.msg_type == TYPE_RESULT_READER
    assert result_value(verdict) == 0

    server = finish(box)
    assert server[0]["o_reader"] == 0
    assert server[0]["o_tag"] is None
    assert server[0]["tag_id"] is None

    data = load_db(db_path)
    assert len(data.journal) == 1
    assert data.journal[0].o_reader == 0

    # Neither side advanced, so the next honest session resyncs on step 1.
    box = start_server(db_path, sessions=1)
    client = run_client(box, tag_paths[0], config, sessions=1)
    server = finish(box)
    assert client[0]["o_tag"] == 1
    assert server[0]["j"] == 2
    assert server[0]["o_reader"] == 1
    assert server[0]["via_step"] == 1
    assert load_db(db_path).current()[system.first_tag_id()].ctr == 2


def test_framing_violations_score_reader_zero(tmp_path):
    config = Config(mode="ma", tags=1, seed="net-frame")
    db_path, _tag_paths, _system = deploy(tmp_path, config)
    box = start_server(db_path, sessions=2)

    # Session 1: an unknown frame type aborts the session.
    with socket.create_connection(("127.0.0.1", box["port"]), timeout=5) as sock:
        read_frame(sock)
        sock.sendall(b"\x00\x00\x00\x00" + b"\x7f" + bytes(16))
        verdict = read_frame(sock)
        assert verdict.msg_type == TYPE_RESULT_READER
        assert result_value(verdict) == 0

    # Session 2: clients may not send reader-result frames.
    with socket.create_connection(("127.0.0.1", box["port"]), timeout=5) as sock:
        challenge = read_frame(sock)
        sock.sendall(result_frame(TYPE_RESULT_READER, challenge.sid, 1).encode())
        verdict = read_frame(sock)
        assert verdict.msg_type == TYPE_RESULT_READER
        assert result_value(verdict) == 0

    server = finish(box)
    assert [r["o_reader"] for r in server] == [0, 0]
    data = load_db(db_path)
    assert [entry.o_reader for entry in data.journal] == [0, 0]


def test_journal_numbering_survives_server_restart(tmp_path):
    config = Config(mode="ma", tags=1, seed="net-restart")
    db_path, tag_paths, system = deploy(tmp_path, config)

    box = start_server(db_path, sessions=2)
    run_client(box, tag_paths[0], config, sessions=2)
    first = finish(box)
    assert [r["j"] for r in first] == [1, 2]

    box = start_server(db_path, sessions=1)
    run_client(box, tag_paths[0], config, sessions=1)
    second = finish(box)
    assert second[0]["j"] == 3
    assert second[0]["o_reader"] == 1
    assert second[0]["via_step"] == 1

    data = load_db(db_path)
    assert [entry.j for entry in data.journal] == [1, 2, 3]
    tid = system.first_tag_id()
    assert data.snapshot(2)[tid].ctr == 3
    assert data.current()[tid].ctr == 4
    _mode, state, _version = load_tag(tag_paths[0])
    assert state.ctr == 4


def test_mode_mismatch_is_rejected_before_connecting(tmp_path):
    config = Config(mode="ma", tags=1, seed="net-mismatch")
    _db_path, tag_paths, _system = deploy(tmp_path, config)
    with pytest.raises(FrameError, match="mode"):
        tag_run(
            tag_paths[0],
            Config(mode="mapop", tags=1),
            host="127.0.0.1",
            port=1,
            announce=lambda line: None,
        )
