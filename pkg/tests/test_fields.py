import numpy as np
import pytest

from jumpflow import ConfigError, GridDomain, StateField
from jumpflow import fields


def test_expression_over_cell_coordinates():
    g = GridDomain.unit(4)
    vals = fields.expression_values(g, "2 * x + i")
    np.testing.assert_allclose(vals, 2 * (np.arange(4) + 0.5) / 4 + np.arange(4))


def test_expression_2d_and_functions():
    g = GridDomain.unit(2, 3)
    vals = fields.expression_values(g, "where(x < 0.5, sin(pi * y), maximum(j, 1))")
    assert vals.shape == (2, 3)
    assert vals[1, 0] == 1.0


@pytest.mark.parametrize(
    "source",
    ["__import__('os')", "x.real", "open('f')", "lambda: 1", "[x]", "x if x else 1", "unknown + 1", "x +", "'s'"],
)
def test_expression_rejects_unsafe_or_invalid(source):
    with pytest.raises(ConfigError):
        fields.expression_values(GridDomain.unit(4), source)


def test_expression_must_be_finite():
    with pytest.raises(ConfigError, match="non-finite"):
        fields.expression_values(GridDomain.unit(4), "1 / (x - x)")


def test_generators_shapes_and_ranges(rng):
    g = GridDomain.unit(8, 8)
    assert np.max(np.abs(fields.random_smooth(g, rng, amplitude=0.5))) == pytest.approx(0.5)
    cb = fields.checkerboard(g, 1.0, 3.0, block=2)
    assert set(np.unique(cb)) == {1.0, 3.0}
    assert fields.bump(g).min() > 1.0


def test_random_monotone_increases_along_each_axis(rng):
    g = GridDomain.unit(10, 6)
    v = fields.random_monotone(g, rng)
    assert np.all(np.diff(v, axis=0) > 0) and np.all(np.diff(v, axis=1) > 0)
    assert np.max(np.abs(v)) == pytest.approx(1.0)


def test_cell_csv_round_trip(tmp_path, rng):
    g = GridDomain.unit(3, 4)
    s = StateField(g, rng.normal(size=(3, 4)))
    path = tmp_path / "s.csv"
    fields.write_cell_csv(path, s)
    assert path.read_bytes().startswith(b"cell,value\r\n")
    np.testing.assert_array_equal(fields.read_cell_csv(path, g), s.values)


def test_cell_csv_errors(tmp_path):
    g = GridDomain.unit(3)
    path = tmp_path / "bad.csv"
    path.write_text("value\n1\nzz\n3\n")
    with pytest.raises(ConfigError, match=":3:"):
        fields.read_cell_csv(path, g)
    path.write_text("1\n2\n")
    with pytest.raises(ConfigError):
        fields.read_cell_csv(path, g)


def test_format_float_round_trips():
    for x in (0.1, 1 / 3, 2.0 ** -1074, 1e300):
        assert float(fields.format_float(x)) == x
