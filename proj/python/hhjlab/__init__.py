"""Dynamic hybrid hash join lab."""

from ._core import (
    DEFAULT_FRAME_BYTES,
    ConfigError,
    FormatError,
    GenerationError,
    InternalError,
    SpecError,
    UnsupportedRecord,
    encode_records,
    generate,
    gs_io_split,
    ideal_spill,
    in_memory_partitions,
    ngns_io_split,
    parse_records,
    partition_count,
    run_join,
    run_sweep,
)

__all__ = [
    "DEFAULT_FRAME_BYTES",
    "ConfigError",
    "FormatError",
    "GenerationError",
    "InternalError",
    "SpecError",
    "UnsupportedRecord",
    "encode_records",
    "generate",
    "gs_io_split",
    "ideal_spill",
    "in_memory_partitions",
    "ngns_io_split",
    "parse_records",
    "partition_count",
    "run_join",
    "run_sweep",
]
