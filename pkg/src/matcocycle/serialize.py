"""JSON schema for cocycle specs and deterministic emission of reports.

Spec schema::

    {
      "alphabet_size": k,
      "transitions": [[0/1, ...], ...],
      "dimension": d,
      "window": w,
      "holder_alpha": a,
      "generators": {"<window word>": [[row], ...], ...},
      "offset": o                      (optional, default 0)
    }

Window words are written as digit strings (``"01"``) when ``k <= 10`` and as
comma-separated symbols (``"10,3"``) otherwise; both forms are accepted on input
for small alphabets.  An optional ``"induced"`` block carries the letter data of
an induced system.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .cocycle import CocycleSpec
from .errors import SpecParseError, SpecValidationError
from .symbolic import SubshiftSpec

SCHEMA_VERSION = "1.0"

REQUIRED = ("alphabet_size", "transitions", "dimension", "window", "holder_alpha", "generators")
OPTIONAL = ("offset", "induced", "schema_version")


def _line_of(text: str, key: str) -> int | None:
    pos = text.find(f'"{key}"')
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _int_field(data: dict, key: str, text: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecParseError("expected an integer", _line_of(text, key), key)
    return value


def parse_window_word(key: str, k: int) -> tuple:
    """Decode a generator key into a tuple of symbols."""
    if "," in key:
        parts = key.split(",")
    elif k <= 10:
        parts = list(key)
    else:
        parts = [key]
    try:
        word = tuple(int(s) for s in parts)
    except ValueError:
        raise SpecParseError(f"bad window word {key!r}", field="generators") from None
    if any(s < 0 or s >= k for s in word):
        raise SpecValidationError(f"window word {key!r} uses symbols outside 0..{k - 1}", "alphabet")
    return word


def format_window_word(word, k: int) -> str:
    return "".join(str(s) for s in word) if k <= 10 else ",".join(str(s) for s in word)


def _matrix(value, key: str, text: str) -> np.ndarray:
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SpecParseError(f"generator {key!r} is not a numeric matrix",
                             _line_of(text, key), "generators") from None
    if M.ndim != 2:
        raise SpecParseError(f"generator {key!r} is not a matrix", _line_of(text, key), "generators")
    return M


def parse_cocycle_spec(text: str) -> CocycleSpec:
    """Parse and validate a spec from its JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(e.msg, e.lineno) from None
    if not isinstance(data, dict):
        raise SpecParseError("top level must be an object", 1)
    for key in REQUIRED:
        if key not in data:
            raise SpecParseError("missing field", field=key)
    for key in data:
        if key not in REQUIRED and key not in OPTIONAL:
            raise SpecParseError("unknown field", _line_of(text, key), key)
    k = _int_field(data, "alphabet_size", text)
    d = _int_field(data, "dimension", text)
    w = _int_field(data, "window", text)
    offset = _int_field(data, "offset", text) if "offset" in data else 0
    alpha = data["holder_alpha"]
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise SpecParseError("expected a number", _line_of(text, "holder_alpha"), "holder_alpha")
    try:
        Q = np.array(data["transitions"], dtype=float)
    except (TypeError, ValueError):
        raise SpecParseError("transitions must be a numeric matrix",
                             _line_of(text, "transitions"), "transitions") from None
    if Q.shape != (k, k):
        raise SpecValidationError(f"transitions must be {k} x {k}", "alphabet_size")
    sft = SubshiftSpec(Q)
    gens_raw = data["generators"]
    if not isinstance(gens_raw, dict):
        raise SpecParseError("generators must be an object", _line_of(text, "generators"), "generators")
    gens = {}
    for key, value in gens_raw.items():
        word = parse_window_word(key, k)
        if word in gens:
            raise SpecValidationError(f"duplicate window word {key!r}", "generators")
        if len(word) != w:
            raise SpecValidationError(f"window word {key!r} does not have length {w}", "window")
        M = _matrix(value, key, text)
        if M.shape != (d, d):
            raise SpecValidationError(f"generator {key!r} is not {d} x {d}", "dimension")
        gens[word] = M
    return CocycleSpec(sft, gens, float(alpha), offset)


def load_cocycle_spec(path) -> CocycleSpec:
    """Read a spec file.

    Raises
    ------
    SpecParseError
        Malformed JSON or fields of the wrong type, with line and field.
    SpecValidationError
        A cocycle invariant fails; ``invariant`` names it.
    """
    return parse_cocycle_spec(Path(path).read_text())


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(e.msg, e.lineno) from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def dump_cocycle_spec(c: CocycleSpec, extra: dict | None = None) -> str:
    data = c.to_json()
    data["schema_version"] = SCHEMA_VERSION
    if extra:
        data.update(extra)
    return dumps(data)
