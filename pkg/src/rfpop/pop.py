"""Proof-of-possession extension of the mutual authentication protocol.

The interior protocol runs unchanged; its final confirmation is wrapped into
a larger third message, and the tag answers with a fourth message proving it
holds its signing key. Per tag the parties share an extra masking key k'
(pop_key) besides the interior key, and each party has a signature keypair.

    reader -> tag : challenge                                  (interior)
    tag    -> reader : index' || nonce || masked_ctr           (interior)
    reader -> tag : confirm || pop_challenge || binder
    tag    -> reader : masked_sig || sig_tag    (+ tag output)

where, with r' a fresh reader nonce,

    pop_challenge = H(Sign_reader(r'))
    binder        = G_k'( H(challenge || tag_reply || confirm) || pop_challenge )
    sig           = Sign_tag(pop_challenge)
    masked_sig    = G_k'(binder) XOR sig        (G evaluated at signature length)
    sig_tag       = G_k'(sig)

The tag validates both the interior confirmation and the binder before
signing, and emits its output together with its final reply. The reader
defers its own output until the fourth message arrives (or times out),
unmasks the signature, and accepts iff it verifies under the tag's public
key and sig_tag matches.

A session that accepted yields a transferable credential:

    cred = (reader_id, tag_id, r', Sign_reader(r'), sig)

rebuilt offline from the reader's session snapshot; the signature sig is
recovered by recomputing the mask, never stored. cred_veri checks the issuer
signature on r' and the tag signature on H(Sign_reader(r')).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

from rfpop.errors import FrameError, KTimeExhausted, PairPoolExhausted
from rfpop.ma import (
    MaParams,
    MaReaderRecord,
    MaTagState,
    ma_reader_auth,
    ma_tag_respond,
    ma_tag_verify,
    parse_tag_reply,
)
from rfpop.model.database import ReaderDatabase
from rfpop.model.session import Reader, ReaderAction, TagAction
from rfpop.model.types import MessageSlot, Msg
from rfpop.primitives.bitstring import BitString
from rfpop.primitives.prf import PrfDescriptor, hash_digest, prf_eval
from rfpop.primitives.rng import Rng
from rfpop.primitives.sig import (
    FULLTIME,
    KTIME,
    FullTimeSigner,
    KTimeSigner,
    VerifyKey,
    fulltime_keygen,
    ktime_keygen,
)

IMPL_FULLTIME = "impl1"  # full-time signatures, online signing
IMPL_POOLED = "impl2"  # full-time signatures, precomputed-pair signing
IMPL_KTIME = "impl3"  # K-time signatures


@dataclass(frozen=True)
class PopParams:
    """Interior lengths plus the possession-layer lengths and signature
    instantiation."""

    ma: MaParams = field(default_factory=MaParams)
    hash_bits: int = 256  # pop challenge, binder, and sig_tag length
    pop_key_bits: int = 256
    sig_impl: str = IMPL_FULLTIME
    k_time: int = 1 << 17  # signing budget for impl3
    pool_size: int = 1 << 17  # precomputed pairs for impl2

    def __post_init__(self):
        if self.sig_impl not in (IMPL_FULLTIME, IMPL_POOLED, IMPL_KTIME):
            raise ValueError(f"unknown signature instantiation {self.sig_impl!r}")

    @property
    def sig_bytes(self) -> int:
        return 32 if self.sig_impl == IMPL_KTIME else 64

    @property
    def finalize_bits(self) -> int:
        return self.ma.out_bits + 2 * self.hash_bits

    @property
    def final_reply_bits(self) -> int:
        return 8 * self.sig_bytes + self.hash_bits

    @property
    def mask_prf(self) -> PrfDescriptor:
        return PrfDescriptor("pop-g", self.pop_key_bits, None, self.hash_bits)


@dataclass
class PopTagState:
    ma: MaTagState
    pop_key: BitString
    signer: object  # FullTimeSigner or KTimeSigner

    @property
    def tag_id(self) -> BitString:
        return self.ma.tag_id


@dataclass
class PopReaderRecord(MaReaderRecord):
    pop_key: BitString = None
    verify_key: VerifyKey = None


@dataclass
class KeyDirectory:
    """Public parameters: every party's verifying key, plus a side table for
    adversary-registered keys (forgery games check credentials against the
    union)."""

    entries: dict[bytes, VerifyKey]
    extras: dict[bytes, VerifyKey] = field(default_factory=dict)

    def key_for(self, party_id: bytes) -> Optional[VerifyKey]:
        if party_id in self.entries:
            return self.entries[party_id]
        return self.extras.get(party_id)

    def register_extra(self, party_id: bytes, key: VerifyKey):
        if party_id in self.entries:
            raise ValueError("cannot shadow an existing party id")
        self.extras[party_id] = key


def transcript_digest(params: PopParams, challenge, tag_reply, confirm) -> BitString:
    """H(challenge || tag_reply || confirm)."""
    data = challenge.to_bytes() + tag_reply.to_bytes() + confirm.to_bytes()
    return hash_digest(data, params.hash_bits)


def binder_value(
    params: PopParams, pop_key: BitString, trs_digest: BitString, pop_challenge: BitString
) -> BitString:
    return prf_eval(params.mask_prf, pop_key, trs_digest.concat(pop_challenge))


def signature_mask(params: PopParams, pop_key: BitString, binder: BitString) -> BitString:
    return prf_eval(params.mask_prf, pop_key, binder, out_bits=8 * params.sig_bytes)


def signature_tag(params: PopParams, pop_key: BitString, sig: bytes) -> BitString:
    return prf_eval(params.mask_prf, pop_key, BitString.from_bytes(sig))


def pop_reader_finalize_send(
    params: PopParams,
    pop_key: BitString,
    reader_signer: FullTimeSigner,
    challenge: BitString,
    tag_reply: BitString,
    confirm: BitString,
    rng: Rng,
) -> tuple[BitString, dict]:
    """Build the wrapped third message and the scratch needed to verify the
    reply and to rebuild the credential later."""
    nonce = rng.take_bits(params.hash_bits)
    pop_challenge = hash_digest(reader_signer.sign(nonce.to_bytes()), params.hash_bits)
    trs = transcript_digest(params, challenge, tag_reply, confirm)
    binder = binder_value(params, pop_key, trs, pop_challenge)
    bits = confirm.concat(pop_challenge).concat(binder)
    scratch = {
        "pop_nonce": nonce,
        "pop_challenge": pop_challenge,
        "binder": binder,
    }
    return bits, scratch


def pop_tag_finalize(
    params: PopParams,
    state: PopTagState,
    scratch: "_PopTagScratch",
    bits: BitString,
) -> TagAction:
    """Validate the wrapped third message; on success sign and reply together
    with the terminal output."""
    confirm, pop_challenge, binder = bits.split(
        params.ma.out_bits, params.hash_bits, params.hash_bits
    )
    if not ma_tag_verify(params.ma, state.ma, scratch.inner, confirm):
        return TagAction("output", output=0, note="interior confirmation invalid")
    trs = transcript_digest(params, scratch.challenge, scratch.reply_bits, confirm)
    if binder_value(params, state.pop_key, trs, pop_challenge) != binder:
        return TagAction("output", output=0, note="binder invalid")
    try:
        sig = state.signer.sign(pop_challenge.to_bytes())
    except (KTimeExhausted, PairPoolExhausted) as exc:
        return TagAction("output", output=0, note=f"signing unavailable: {exc}")
    masked = signature_mask(params, state.pop_key, binder).xor(BitString.from_bytes(sig))
    tag_check = signature_tag(params, state.pop_key, sig)
    return TagAction("reply_output", bits=masked.concat(tag_check), output=1)


def pop_reader_verify(
    params: PopParams,
    pop_key: BitString,
    verify_key: VerifyKey,
    pop_challenge: BitString,
    binder: BitString,
    bits: BitString,
) -> bool:
    """Unmask and verify the tag's possession signature."""
    masked, tag_check = bits.split(8 * params.sig_bytes, params.hash_bits)
    sig = masked.xor(signature_mask(params, pop_key, binder)).to_bytes()
    if not verify_key.verify(pop_challenge.to_bytes(), sig):
        return False
    return signature_tag(params, pop_key, sig) == tag_check


@dataclass
class _PopTagScratch:
    """Interior scratch plus the raw round-1 reply (needed for the transcript
    digest)."""

    inner: object
    reply_bits: BitString

    @property
    def challenge(self):
        return self.inner.challenge


class PopProtocol:
    """Plug-in for the generic session machines; supports both the extended
    mode ("pop") and a plain interior session ("ma") on the same hardware."""

    name = "mapop"

    def __init__(self, params: PopParams, reader_signer: FullTimeSigner):
        self.params = params
        self.reader_signer = reader_signer

    def slots(self) -> list[MessageSlot]:
        p = self.params
        return [
            MessageSlot("reader", (p.ma.challenge_bits,)),
            MessageSlot("tag", (p.ma.reply_bits,)),
            MessageSlot("reader", (p.finalize_bits, p.ma.out_bits)),
            MessageSlot("tag", (p.final_reply_bits,)),
        ]

    def default_mode(self) -> str:
        return "pop"

    def reader_open(self, db, session, rng: Rng) -> BitString:
        return rng.take_bits(self.params.ma.challenge_bits)

    def reader_on_message(self, db, session, msg: Msg, rng: Rng) -> ReaderAction:
        if msg.round == 1:
            return self._reader_on_reply(db, session, msg, rng)
        if msg.round == 3:
            return self._reader_on_final(db, session, msg)
        return ReaderAction("reject", note="unexpected round")

    def _reader_on_reply(self, db, session, msg: Msg, rng: Rng) -> ReaderAction:
        reply = parse_tag_reply(self.params.ma, msg.bits)
        result = ma_reader_auth(self.params.ma, db, session.challenge, reply)
        if not result.accepted:
            return ReaderAction("reject", via_step=0)
        if session.mode == "ma":
            return ReaderAction(
                "accept_send",
                bits=result.confirm,
                tag_id=result.tag_id,
                via_step=result.via_step,
            )
        record = db.get(result.tag_id)
        bits, scratch = pop_reader_finalize_send(
            self.params,
            record.pop_key,
            self.reader_signer,
            session.challenge,
            msg.bits,
            result.confirm,
            rng,
        )
        session.coins["pop_nonce"] = scratch["pop_nonce"].to_bytes()
        session.scratch = {
            "tag_id": result.tag_id,
            "via_step": result.via_step,
            "pop_challenge": scratch["pop_challenge"],
            "binder": scratch["binder"],
        }
        return ReaderAction("reply", bits=bits)

    def _reader_on_final(self, db, session, msg: Msg) -> ReaderAction:
        sc = session.scratch
        record = db.get(sc["tag_id"])
        ok = pop_reader_verify(
            self.params,
            record.pop_key,
            record.verify_key,
            sc["pop_challenge"],
            sc["binder"],
            msg.bits,
        )
        if ok:
            return ReaderAction("accept", tag_id=sc["tag_id"], via_step=sc["via_step"])
        return ReaderAction("reject", note="possession proof invalid")

    def tag_respond(self, state: PopTagState, sid, challenge: BitString, rng: Rng):
        reply, inner = ma_tag_respond(self.params.ma, state.ma, challenge, rng)
        bits = reply.bits()
        return bits, _PopTagScratch(inner=inner, reply_bits=bits)

    def tag_on_message(self, state: PopTagState, scratch, msg: Msg, rng: Rng) -> TagAction:
        if len(msg.bits) == self.params.ma.out_bits:
            ok = ma_tag_verify(self.params.ma, state.ma, scratch.inner, msg.bits)
            return TagAction("output", output=1 if ok else 0)
        return pop_tag_finalize(self.params, state, scratch, msg.bits)

    def tag_terminal(self, state: PopTagState):
        pass


CRED_VERSION = 0x01


@dataclass(frozen=True)
class Credential:
    """Transferable proof that `tag_id` was in the reader's field during an
    accepted session."""

    reader_id: bytes
    tag_id: bytes
    nonce: bytes  # cred1: the reader's fresh nonce r'
    issuer_sig: bytes  # cred2: Sign_reader(r')
    possession_sig: bytes  # cred3: Sign_tag(H(cred2))

    def fields(self) -> tuple[bytes, ...]:
        return (self.reader_id, self.tag_id, self.nonce, self.issuer_sig, self.possession_sig)

    def encode(self) -> bytes:
        out = [bytes([CRED_VERSION])]
        for f in self.fields():
            if len(f) > 0xFFFF:
                raise FrameError("credential field too long")
            out.append(struct.pack(">H", len(f)))
            out.append(f)
        return b"".join(out)

    @classmethod
    def decode(cls, data: bytes) -> "Credential":
        if not data or data[0] != CRED_VERSION:
            raise FrameError("bad credential version byte")
        fields = []
        at = 1
        for _ in range(5):
            if at + 2 > len(data):
                raise FrameError("truncated credential")
            (n,) = struct.unpack(">H", data[at : at + 2])
            at += 2
            if at + n > len(data):
                raise FrameError("truncated credential field")
            fields.append(data[at : at + n])
            at += n
        if at != len(data):
            raise FrameError("trailing bytes after credential")
        return cls(*fields)


def cred_gen(
    params: PopParams,
    reader: Reader,
    reader_signer: FullTimeSigner,
    j: int,
) -> Optional[Credential]:
    """Rebuild the credential for accepted session j from the snapshot; None
    for rejected, timed-out, or plain-mode sessions.

    The tag's possession signature is recovered by recomputing the mask from
    the masking key in the database image the session ran against; it is
    never stored."""
    record = reader.history.session(j)
    if record.o_reader != 1 or record.mode != "pop" or record.tag_id is None:
        return None
    db_image = reader.history.db_at(j - 1)
    tag_record = db_image[record.tag_id]
    nonce = record.coins["pop_nonce"]
    issuer_sig = reader_signer.sign(nonce)
    finalize_bits = next(m.bits for m in record.messages if m.round == 2)
    final_reply = next(m.bits for m in record.messages if m.round == 3)
    _, _, binder = finalize_bits.split(
        params.ma.out_bits, params.hash_bits, params.hash_bits
    )
    masked, _ = final_reply.split(8 * params.sig_bytes, params.hash_bits)
    possession = masked.xor(signature_mask(params, tag_record.pop_key, binder)).to_bytes()
    return Credential(
        reader_id=reader.reader_id,
        tag_id=record.tag_id,
        nonce=nonce,
        issuer_sig=issuer_sig,
        possession_sig=possession,
    )


def cred_veri(params: PopParams, directory: KeyDirectory, cred: Credential) -> int:
    """1 iff the issuer signature and the possession signature both verify
    under the directory's keys; unknown parties and malformed values give 0."""
    issuer_key = directory.key_for(cred.reader_id)
    tag_key = directory.key_for(cred.tag_id)
    if issuer_key is None or tag_key is None:
        return 0
    if not issuer_key.verify(cred.nonce, cred.issuer_sig):
        return 0
    pop_challenge = hash_digest(cred.issuer_sig, params.hash_bits)
    if not tag_key.verify(pop_challenge.to_bytes(), cred.possession_sig):
        return 0
    return 1


@dataclass
class PiPrimeReaderSide:
    params: PopParams
    pop_key: BitString
    signer: FullTimeSigner
    tag_key: VerifyKey
    context: bytes  # transcript the subprotocol binds to


@dataclass
class PiPrimeTagSide:
    params: PopParams
    pop_key: BitString
    signer: object
    context: bytes


def piprime_run(
    reader_side: PiPrimeReaderSide, tag_side: PiPrimeTagSide, rng: Rng
) -> tuple[int, int, dict]:
    """Standalone possession subprotocol over an agreed context string.

    Returns (reader output, tag output, messages). The tag refuses to sign
    unless the binder authenticates the challenge under the shared masking
    key."""
    params = reader_side.params
    nonce = rng.take_bits(params.hash_bits)
    pop_challenge = hash_digest(reader_side.signer.sign(nonce.to_bytes()), params.hash_bits)
    ctx_digest = hash_digest(reader_side.context, params.hash_bits)
    binder = binder_value(params, reader_side.pop_key, ctx_digest, pop_challenge)
    msgs = {"pop_challenge": pop_challenge, "binder": binder}

    tag_ctx = hash_digest(tag_side.context, params.hash_bits)
    if binder_value(tag_side.params, tag_side.pop_key, tag_ctx, pop_challenge) != binder:
        return 0, 0, msgs
    try:
        sig = tag_side.signer.sign(pop_challenge.to_bytes())
    except (KTimeExhausted, PairPoolExhausted):
        return 0, 0, msgs
    masked = signature_mask(tag_side.params, tag_side.pop_key, binder).xor(
        BitString.from_bytes(sig)
    )
    tag_check = signature_tag(tag_side.params, tag_side.pop_key, sig)
    msgs["masked_sig"] = masked
    msgs["sig_tag"] = tag_check
    o_tag = 1

    ok = pop_reader_verify(
        params,
        reader_side.pop_key,
        reader_side.tag_key,
        pop_challenge,
        binder,
        masked.concat(tag_check),
    )
    return (1 if ok else 0), o_tag, msgs


def pop_setup(
    params: PopParams, tag_count: int, rng: Rng, reader_id: bytes = b"reader-0"
) -> tuple[list[PopTagState], list[PopReaderRecord], KeyDirectory, FullTimeSigner]:
    """Extend the interior setup with masking keys and signature keypairs."""
    from rfpop.ma import index_for

    reader_signer, reader_vk = fulltime_keygen(rng)
    entries = {reader_id: reader_vk}
    tags = []
    records = []
    for i in range(tag_count):
        tag_id = BitString.from_bytes(bytes(28) + i.to_bytes(4, "big"))
        key = rng.take_bits(params.ma.key_bits)
        pop_key = rng.take_bits(params.pop_key_bits)
        if params.sig_impl == IMPL_FULLTIME:
            signer, vk = fulltime_keygen(rng)
        elif params.sig_impl == IMPL_POOLED:
            signer, vk = fulltime_keygen(rng, pool_size=params.pool_size)
        else:
            signer, vk = ktime_keygen(rng, params.k_time)
        tags.append(PopTagState(
            ma=MaTagState(tag_id=tag_id, key=key, ctr=1),
            pop_key=pop_key,
            signer=signer,
        ))
        records.append(PopReaderRecord(
            tag_id=tag_id,
            key=key,
            ctr=1,
            index=index_for(params.ma, key, 1),
            pop_key=pop_key,
            verify_key=vk,
        ))
        entries[tag_id.to_bytes()] = vk
    return tags, records, KeyDirectory(entries=entries), reader_signer
