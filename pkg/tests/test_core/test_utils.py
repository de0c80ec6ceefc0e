"""Tests for shared utilities."""

from __future__ import annotations

import numpy as np
import pytest

from surveyopt.core.utils import (
    generate_run_id,
    hash_file,
    load_json,
    parse_range,
    save_json,
    split_names,
)


def test_parse_range():
    """Test parsing LO:HI:STEP values."""
    assert parse_range("500:4000:10") == (500, 4000, 10)
    with pytest.raises(ValueError):
        parse_range("1:2")
    with pytest.raises(ValueError):
        parse_range("a:b:c")


def test_split_names():
    """Test comma-separated flag parsing."""
    assert split_names("oga, lasso,,post-lasso ") == ["oga", "lasso", "post-lasso"]
    assert split_names(None) == []


def test_save_json_numpy(tmp_path):
    """Test that numpy scalars and arrays serialize."""
    path = tmp_path / "sub" / "out.json"
    save_json({"a": np.float64(1.5), "b": np.arange(3), "c": np.int64(2)}, path)
    assert load_json(path) == {"a": 1.5, "b": [0, 1, 2], "c": 2}


def test_hash_file_stable(tmp_path):
    """Test that equal contents hash equally."""
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text("same", encoding="utf-8")
    b.write_text("same", encoding="utf-8")
    assert hash_file(a) == hash_file(b)
    assert len(hash_file(a)) == 64


def test_run_id_format():
    """Test run id shape."""
    run_id = generate_run_id()
    assert run_id.startswith("run_")
    assert run_id != generate_run_id()
