"""Dataset pipeline: turns ordinary chat dialogues into time-sliced duplex training data."""

from .corpus import (
    CorpusStats,
    StatsAccumulator,
    build_corpus,
    dialogue_from_json,
    dialogue_to_json,
    dialogue_token_count,
    iter_corpus,
    read_corpus,
    read_sources,
    write_corpus,
)
from .generators import (
    DEFAULT_MIX,
    gen_back_on_topic,
    gen_basic,
    gen_dialogue_reset,
    gen_regeneration,
    gen_termination,
    gen_topic_interweaving,
)
from .models import (
    CATEGORIES,
    CountOutOfRange,
    DuplexDialogue,
    ForgeError,
    SourceDialogue,
    TooShort,
)
from .rewriter import FUSE_PROMPT, IdentityRewriter, RemoteRewriter, Rewriter
from .transitions import (
    REGENERATION_TRANSITIONS,
    RESET_TRANSITIONS,
    TERMINATION_TRANSITIONS,
    TransitionBank,
)
from .validate import validate_dialogue

__all__ = [
    "CATEGORIES",
    "CorpusStats",
    "CountOutOfRange",
    "DEFAULT_MIX",
    "DuplexDialogue",
    "FUSE_PROMPT",
    "ForgeError",
    "IdentityRewriter",
    "REGENERATION_TRANSITIONS",
    "RESET_TRANSITIONS",
    "RemoteRewriter",
    "Rewriter",
    "SourceDialogue",
    "StatsAccumulator",
    "TERMINATION_TRANSITIONS",
    "TooShort",
    "TransitionBank",
    "build_corpus",
    "dialogue_from_json",
    "dialogue_to_json",
    "dialogue_token_count",
    "gen_back_on_topic",
    "gen_basic",
    "gen_dialogue_reset",
    "gen_regeneration",
    "gen_termination",
    "gen_topic_interweaving",
    "iter_corpus",
    "read_corpus",
    "read_sources",
    "validate_dialogue",
    "write_corpus",
]
