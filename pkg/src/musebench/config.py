"""TOML run configuration for the command-line entry point.

A config file holds one table per subcommand, keyed by the command name
as typed on the command line, with keys matching the long option names
(underscored).  A shared ``[llm]`` table feeds endpoint settings into
every command that talks to the completion API; a command's own table
overrides it.  Command-line flags beat everything in the file.

Example::

    [llm]
    endpoint = "http://localhost:8000/v1/chat/completions"

    [sample]
    n = 200
    budget_nodes = 500000

    [synth]
    model = "gpt-4"
"""

from __future__ import annotations

import sys
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 interpreters
    import tomli as tomllib

from .errors import ValidationFailure

# commands that may need [llm] endpoint settings merged in
_DISPATCH_COMMANDS = ("synth", "split-elements", "gen-questions")


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationFailure(f"bad config file {path}: {exc}") from exc
    for key, val in cfg.items():
        if not isinstance(val, Mapping):
            raise ValidationFailure(
                f"config {path}: top-level entry {key!r} must be a table"
            )
    return cfg


def default_map_from(cfg: Mapping) -> dict:
    """Shape a parsed config into click's ``ctx.default_map``.

    Tables keep their command's name; ``[llm]`` is folded into the
    dispatching commands (their own keys win).
    """
    out = {k: dict(v) for k, v in cfg.items() if k != "llm"}
    llm = cfg.get("llm", {})
    if llm:
        for cmd in _DISPATCH_COMMANDS:
            merged = dict(llm)
            merged.update(out.get(cmd, {}))
            out[cmd] = merged
    return out
