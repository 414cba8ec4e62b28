import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contmeas.errors import BadShape
from contmeas.serialization import (
    canonical_json,
    decode_matrix,
    dump_json,
    encode_matrix,
    format_float,
)

finite_doubles = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(finite_doubles)
def test_format_float_roundtrips(x):
    assert float(format_float(x)) == x


def test_format_float_specials():
    assert format_float(float("nan")) == "NaN"
    assert format_float(float("inf")) == "Infinity"
    assert format_float(float("-inf")) == "-Infinity"
    assert float(format_float(0.1)) == 0.1


def test_matrix_roundtrip(rng):
    m = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    back = decode_matrix(encode_matrix(m))
    assert np.array_equal(back, m)


def test_decode_matrix_accepts_bare_reals():
    m = decode_matrix([[1, 0], [0, 1]])
    assert np.array_equal(m, np.eye(2, dtype=complex))


def test_decode_matrix_rejects_bad_shapes():
    with pytest.raises(BadShape):
        decode_matrix([])
    with pytest.raises(BadShape):
        decode_matrix([[1, 0], [0]])  # ragged
    with pytest.raises(BadShape):
        decode_matrix([[[1, 2, 3]]])  # entry is not [re, im]
    with pytest.raises(BadShape):
        decode_matrix("nope")


def test_canonical_json_is_deterministic():
    a = canonical_json({"b": 1.5, "a": [1.0, 2.0]})
    b = canonical_json({"a": [1.0, 2.0], "b": 1.5})
    assert a == b
    assert a.index('"a"') < a.index('"b"')


def test_canonical_json_17_digits():
    text = canonical_json({"x": 1.0 / 3.0})
    assert "0.33333333333333331" in text
    assert json.loads(text)["x"] == 1.0 / 3.0


def test_canonical_json_complex_and_arrays():
    text = canonical_json({"m": np.array([[1 + 2j]])})
    assert json.loads(text)["m"] == [[[1.0, 2.0]]]


def test_dump_json(tmp_path):
    path = tmp_path / "out.json"
    dump_json({"k": 2.0}, str(path))
    raw = path.read_text()
    assert raw.endswith("\n")
    assert json.loads(raw) == {"k": 2.0}
