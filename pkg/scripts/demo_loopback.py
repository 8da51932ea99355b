#!/usr/bin/env python3
"""End-to-end loopback demo: set up a deployment, run socket sessions, verify
the issued credential offline.

Creates a temporary directory with a reader database and tag key files, serves
a few sessions over 127.0.0.1, then checks the credential the tag received.
"""

import argparse
import json
import os
import queue
import sys
import tempfile
import threading

from rfpop.app.cli import main as cli_main
from rfpop.app.config import load_config
from rfpop.app.netrun import serve_reader, tag_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sessions", type=int, default=3)
    parser.add_argument("--mode", choices=("ma", "mapop"), default="mapop")
    parser.add_argument("--seed", default="loopback-demo")
    args = parser.parse_args()

    workdir = tempfile.mkdtemp(prefix="rfpop-demo-")
    config_path = os.path.join(workdir, "config.json")
    with open(config_path, "w", encoding="utf-8") as handle:
        json.dump({"mode": args.mode, "seed": args.seed, "tags": 2}, handle)

    rc = cli_main(["setup", "--config", config_path, "--out", workdir])
    if rc != 0:
        return rc

    db_path = os.path.join(workdir, "reader.db")
    tag_path = os.path.join(workdir, "tag-000.json")
    cred_path = os.path.join(workdir, "credential.bin")

    ports = queue.Queue()
    server = threading.Thread(
        target=serve_reader,
        args=(db_path,),
        kwargs={"host": "127.0.0.1", "port": 0, "sessions": args.sessions,
                "ready": ports.put},
        daemon=True,
    )
    server.start()
    port = ports.get(timeout=10)

    config = load_config(config_path)
    tag_run(
        tag_path,
        config,
        host="127.0.0.1",
        port=port,
        sessions=args.sessions,
        cred_out=cred_path if args.mode == "mapop" else None,
    )
    server.join(timeout=30)

    if args.mode == "mapop":
        print()
        return cli_main(["cred", "verify", "--db", db_path, "--cred", cred_path])
    return 0


if __name__ == "__main__":
    sys.exit(main())
