"""Schema-constrained SQL generation with grammar-weighted oracles."""

from ._core import (
    Engine,
    GenerationError,
    MappingError,
    OracleError,
    ProtocolError,
    Schema,
    SchemaError,
    SqlSyntaxError,
    build_prompt,
    canonicalize,
    check_executable,
    detokenize,
    import_spider,
    instantiate_database,
    load_schema,
    load_schema_file,
    random_schema,
    tokenize,
)

__all__ = [
    "Engine",
    "GenerationError",
    "MappingError",
    "OracleError",
    "ProtocolError",
    "Schema",
    "SchemaError",
    "SqlSyntaxError",
    "build_prompt",
    "canonicalize",
    "check_executable",
    "detokenize",
    "import_spider",
    "instantiate_database",
    "load_schema",
    "load_schema_file",
    "random_schema",
    "tokenize",
]
