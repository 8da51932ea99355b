"""Generic reader/tag session model: message types, databases with snapshot
history, and the party state machines the concrete protocols plug into."""

from rfpop.model.types import (
    IGNORE,
    MessageSlot,
    Msg,
    Output,
    Reply,
    ReplyWithOutput,
    StepOutcome,
    Transcript,
)
from rfpop.model.session import (
    Reader,
    Tag,
    reader_start,
    reader_step,
    reader_timeout,
    run_honest_session,
    tag_step,
)

__all__ = [
    "IGNORE",
    "MessageSlot",
    "Msg",
    "Output",
    "Reply",
    "ReplyWithOutput",
    "StepOutcome",
    "Transcript",
    "Reader",
    "Tag",
    "reader_start",
    "reader_step",
    "reader_timeout",
    "run_honest_session",
    "tag_step",
]
