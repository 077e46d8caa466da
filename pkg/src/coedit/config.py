"""Run configuration: defaults, optional TOML file, environment, flags.

Precedence: built-in defaults < config file < COEDIT_TOKENIZER < flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

TOKENIZER_ENV = "COEDIT_TOKENIZER"


@dataclass
class RunConfig:
    seed: int = 0
    tokenizer: str = "simple"
    query_tokens: int = 1024
    reference_block_tokens: int = 512
    reference_budget_tokens: int = 16384
    cursor_jump_cost: int = 4
    init_cursor_dis: int = 4
    max_rounds: int = 6
    oracle_timeout: float = 30.0
    jobs: int = 1
    figures: bool = True

    def __post_init__(self):
        for name in (
            "query_tokens",
            "reference_block_tokens",
            "reference_budget_tokens",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")


def load_config(path: str | Path | None = None, env: dict | None = None) -> RunConfig:
    values: dict = {}
    if path is not None:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    env = os.environ if env is None else env
    if env.get(TOKENIZER_ENV):
        values["tokenizer"] = env[TOKENIZER_ENV]
    return RunConfig(**values)
