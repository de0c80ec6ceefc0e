"""Tests for sample-size grids."""

from __future__ import annotations

import pytest

from surveyopt.cost.grid import Clusters, Individuals, SizeGrid


def test_parse_individual_grid():
    """Test parsing a LO:HI:STEP grid."""
    grid = SizeGrid.parse("500:600:50")
    assert [s.n for s in grid] == [500, 550, 600]
    assert grid.describe() == "3 sizes from n=500 to n=600"


def test_cluster_grid_sorted():
    """Test that cluster grids are ordered by effective size, then cluster count."""
    grid = SizeGrid.clusters((1, 3, 1), (2, 4, 2))
    keys = [s.key for s in grid]
    assert keys == sorted(keys)
    assert len(grid) == 6
    assert grid.largest == Clusters(c=3, n_c=4)


def test_grid_must_increase():
    """Test that duplicate or decreasing sizes are rejected."""
    with pytest.raises(ValueError, match="strictly increasing"):
        SizeGrid(sizes=(Individuals(n=10), Individuals(n=10)))


def test_bad_range_text():
    """Test that malformed ranges are rejected."""
    with pytest.raises(ValueError, match="LO:HI:STEP"):
        SizeGrid.parse("500-600")
    with pytest.raises(ValueError, match="Invalid range"):
        SizeGrid.parse("600:500:1")


def test_cluster_effective_size():
    """Test the effective size and JSON form of a cluster design."""
    size = Clusters(c=95, n_c=24)
    assert size.effective_n == 2_280
    assert size.to_json() == {"n": 2_280, "clusters": [95, 24]}
    assert str(size) == "c=95 x n_c=24"
