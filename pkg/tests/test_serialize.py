from __future__ import annotations

import json

import numpy as np
import pytest

from matcocycle.cocycle import CocycleSpec
from matcocycle.errors import SpecParseError, SpecValidationError
from matcocycle.serialize import (SCHEMA_VERSION, dump_cocycle_spec, format_window_word, parse_cocycle_spec,
                                  parse_window_word)
from matcocycle.symbolic import SubshiftSpec

MINIMAL = {
    "alphabet_size": 2,
    "transitions": [[1, 1], [1, 0]],
    "window": 1,
    "dimension": 2,
    "holder_alpha": 1.0,
    "generators": {"0": [[2.0, 0.0], [0.0, 0.5]], "1": [[1.0, 1.0], [0.0, 1.0]]},
}


def text(**changes):
    data = dict(MINIMAL)
    data.update(changes)
    return json.dumps(data, indent=2)


def test_minimal_spec_loads():
    c = parse_cocycle_spec(text())
    assert c.k == 2 and c.dimension == 2 and c.window == 1
    assert np.allclose(c.generator((0,)), np.diag([2.0, 0.5]))


def test_missing_generator():
    with pytest.raises(SpecValidationError) as e:
        parse_cocycle_spec(text(generators={"0": [[2.0, 0.0], [0.0, 0.5]]}))
    assert e.value.invariant == "completeness"


def test_singular_generator():
    gens = dict(MINIMAL["generators"], **{"1": [[1.0, 2.0], [0.5, 1.0]]})
    with pytest.raises(SpecValidationError) as e:
        parse_cocycle_spec(text(generators=gens))
    assert e.value.invariant == "invertibility"


def test_wrong_shape():
    gens = dict(MINIMAL["generators"], **{"1": [[1.0]]})
    with pytest.raises(SpecValidationError) as e:
        parse_cocycle_spec(text(generators=gens))
    assert e.value.invariant == "dimension"


def test_parse_error_has_line():
    bad = text().replace('"window": 1,', '"window": 1,,')
    with pytest.raises(SpecParseError) as e:
        parse_cocycle_spec(bad)
    assert e.value.line == bad.splitlines().index('  "window": 1,,') + 1


def test_unknown_field():
    with pytest.raises(SpecParseError) as e:
        parse_cocycle_spec(text(colour="red"))
    assert e.value.field == "colour"
    assert e.value.line is not None


def test_wrong_type():
    with pytest.raises(SpecParseError) as e:
        parse_cocycle_spec(text(window="one"))
    assert e.value.field == "window"


def test_roundtrip_idempotent():
    c = parse_cocycle_spec(text())
    once = dump_cocycle_spec(c)
    twice = dump_cocycle_spec(parse_cocycle_spec(once))
    assert once == twice
    assert json.loads(once)["schema_version"] == SCHEMA_VERSION


def test_roundtrip_with_offset(two_sided_bunched):
    once = dump_cocycle_spec(two_sided_bunched)
    c = parse_cocycle_spec(once)
    assert c.offset == -1 and c.window == 2
    assert dump_cocycle_spec(c) == once


def test_large_alphabet_keys():
    k = 12
    c = CocycleSpec(SubshiftSpec.full(k), {(a,): [[float(a + 1)]] for a in range(k)})
    data = json.loads(dump_cocycle_spec(c))
    assert "11" in data["generators"]
    assert format_window_word((10, 3), 12) == "10,3"
    assert parse_window_word("10,3", 12) == (10, 3)
    assert parse_window_word("01", 2) == (0, 1)
    assert parse_cocycle_spec(dump_cocycle_spec(c)).k == k
