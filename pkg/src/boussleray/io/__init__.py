from .config import ConfigError, RunConfig, parse_config, serialize_config
from .reports import RunManifest, read_rate_table, write_energy_ledger, write_jsonl, write_rate_table
from .vtk import write_vtk

__all__ = [
    "ConfigError",
    "RunConfig",
    "RunManifest",
    "parse_config",
    "read_rate_table",
    "serialize_config",
    "write_energy_ledger",
    "write_jsonl",
    "write_rate_table",
    "write_vtk",
]
