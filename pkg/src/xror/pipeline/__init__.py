"""Dataset production: validate, anonymize, enrich, pack, report, synthesize."""

from ..validation import validate_recording
from .anonymize import KEY_ENV, anon_id, anonymize, key_from_env, parse_key
from .corpus import (
    MAX_USERS_PER_SHARD,
    CorpusStats,
    ShardManifest,
    corpus_stats,
    pack_shards,
    plan_shards,
    prepare,
    shard_count,
    write_corpus,
)
from .enrich import FixtureClient, LookupKind, MetadataClient, enrich
from .synth import PROFILES, SynthProfile, profile_by_name, synth

__all__ = [
    "KEY_ENV",
    "MAX_USERS_PER_SHARD",
    "PROFILES",
    "CorpusStats",
    "FixtureClient",
    "LookupKind",
    "MetadataClient",
    "ShardManifest",
    "SynthProfile",
    "anon_id",
    "anonymize",
    "corpus_stats",
    "enrich",
    "key_from_env",
    "pack_shards",
    "parse_key",
    "plan_shards",
    "prepare",
    "profile_by_name",
    "shard_count",
    "synth",
    "validate_recording",
    "write_corpus",
]
