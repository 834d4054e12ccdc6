"""JSONL reading/writing with line-accurate diagnostics.

``parse_jsonl`` accepts a path or an open text stream, decodes one JSON
object per line and hands it to the schema's ``from_json_dict``; any
problem is re-raised as a SchemaError carrying the 1-based line number.
A field map (canonical name -> external name) adapts externally
produced files whose keys differ from the canonical schema.

``write_jsonl`` emits one compact object per line in dataclass field
order, so identical records always serialize to identical bytes.
"""

from __future__ import annotations

import io
import json
from typing import IO, Iterable, Mapping

from .errors import SchemaError, ValidationFailure
from .records import SCHEMAS


def _resolve(schema):
    if isinstance(schema, str):
        try:
            return SCHEMAS[schema]
        except KeyError:
            raise SchemaError(f"unknown schema {schema!r}") from None
    return schema


def apply_field_map(obj: Mapping, field_map: Mapping[str, str]) -> dict:
    """Rename external keys to canonical ones.

    field_map maps canonical -> external; keys whose external name is
    absent are simply left out, everything unmapped passes through.
    """
    renamed = dict(obj)
    for canonical, external in field_map.items():
        if external in renamed and canonical != external:
            renamed[canonical] = renamed.pop(external)
    return renamed


def parse_jsonl(source, schema, *, field_map: Mapping[str, str] | None = None) -> list:
    cls = _resolve(schema)
    close = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        stream: IO[str] = open(source, "r", encoding="utf-8")
        close = True
    elif isinstance(source, io.TextIOBase) or hasattr(source, "readline"):
        stream = source
    else:
        raise SchemaError("source must be a path or text stream")
    out = []
    try:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(obj, dict):
                raise SchemaError("each line must hold a JSON object", line=lineno)
            if field_map:
                obj = apply_field_map(obj, field_map)
            try:
                out.append(cls.from_json_dict(obj))
            except ValidationFailure as exc:
                raise SchemaError(str(exc), line=lineno) from None
    finally:
        if close:
            stream.close()
    return out


def dump_record(record) -> str:
    return json.dumps(record.to_json_dict(), ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(target, records: Iterable) -> None:
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(dump_record(rec) + "\n")
    else:
        for rec in records:
            target.write(dump_record(rec) + "\n")
