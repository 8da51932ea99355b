"""System containers: one reader, a tag population, and shared parameters.

Builders wire the protocol objects, database, and key material together from
a single RNG so that identically seeded systems are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from rfpop.counterexample import CexParams, CexProtocol, cex_setup
from rfpop.ma import MaParams, MaProtocol, ma_setup
from rfpop.model.database import ReaderDatabase
from rfpop.model.session import Reader, Tag, run_honest_session
from rfpop.model.types import Transcript
from rfpop.pop import KeyDirectory, PopParams, PopProtocol, pop_setup
from rfpop.primitives.rng import Rng

DEFAULT_LIFETIME = 1 << 17


@dataclass
class System:
    kind: str
    protocol: object
    params: object
    reader: Reader
    tags: dict[bytes, Tag]
    rng: Rng
    lifetime: int
    directory: Optional[KeyDirectory] = None
    reader_signer: object = None

    def tag_ids(self) -> list[bytes]:
        return sorted(self.tags)

    def tag(self, tag_id: bytes) -> Tag:
        return self.tags[tag_id]

    def first_tag_id(self) -> bytes:
        return self.tag_ids()[0]

    def run_honest(self, tag_id: Optional[bytes] = None, mode: Optional[str] = None) -> Transcript:
        tag = self.tags[tag_id if tag_id is not None else self.first_tag_id()]
        return run_honest_session(self.reader, tag, self.rng, mode=mode)


def _wrap_tags(protocol, states, lifetime) -> dict[bytes, Tag]:
    return {
        st.tag_id.to_bytes(): Tag(protocol, st, lifetime)
        for st in states
    }


def build_ma_system(
    rng: Rng,
    tag_count: int = 2,
    params: Optional[MaParams] = None,
    lifetime: int = DEFAULT_LIFETIME,
) -> System:
    params = params or MaParams()
    protocol = MaProtocol(params)
    states, records = ma_setup(params, tag_count, rng.spawn("setup"))
    reader = Reader(protocol, ReaderDatabase(records), reader_id=b"reader-0")
    return System(
        kind="ma",
        protocol=protocol,
        params=params,
        reader=reader,
        tags=_wrap_tags(protocol, states, lifetime),
        rng=rng.spawn("session"),
        lifetime=lifetime,
    )


def build_pop_system(
    rng: Rng,
    tag_count: int = 2,
    params: Optional[PopParams] = None,
    lifetime: int = DEFAULT_LIFETIME,
    reader_id: bytes = b"reader-0",
) -> System:
    params = params or PopParams()
    states, records, directory, reader_signer = pop_setup(
        params, tag_count, rng.spawn("setup"), reader_id=reader_id
    )
    protocol = PopProtocol(params, reader_signer)
    reader = Reader(protocol, ReaderDatabase(records), reader_id=reader_id)
    return System(
        kind="mapop",
        protocol=protocol,
        params=params,
        reader=reader,
        tags=_wrap_tags(protocol, states, lifetime),
        rng=rng.spawn("session"),
        lifetime=lifetime,
        directory=directory,
        reader_signer=reader_signer,
    )


def build_cex_system(
    rng: Rng,
    tag_count: int = 2,
    params: Optional[CexParams] = None,
    lifetime: int = DEFAULT_LIFETIME,
) -> System:
    params = params or CexParams()
    protocol = CexProtocol(params)
    states, records = cex_setup(params, tag_count, rng.spawn("setup"))
    reader = Reader(protocol, ReaderDatabase(records), reader_id=b"reader-0")
    return System(
        kind="cex",
        protocol=protocol,
        params=params,
        reader=reader,
        tags=_wrap_tags(protocol, states, lifetime),
        rng=rng.spawn("session"),
        lifetime=lifetime,
    )


def mapop_session(system: System, tag_id: Optional[bytes] = None) -> Transcript:
    """One full extended-mode session against the chosen tag."""
    if system.kind != "mapop":
        raise ValueError("mapop_session needs a proof-of-possession system")
    return system.run_honest(tag_id=tag_id, mode="pop")


SYSTEM_BUILDERS = {
    "ma": build_ma_system,
    "mapop": build_pop_system,
    "cex": build_cex_system,
}
