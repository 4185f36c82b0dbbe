import numpy as np
import pytest

from instability import formats


def test_pgm_round_trip(tmp_path):
    values = np.array([[0, 1, 3], [2, 2, 0]])
    path = formats.write_text(tmp_path / "a.pgm", formats.pgm_text(values, 3))
    assert path.read_text().startswith("P2\n3 2\n3\n")
    magic, arr, maxval = formats.read_netpbm(path)
    assert magic == "P2" and maxval == 3
    assert np.array_equal(arr, values)


def test_pgm_rejects_values_above_maxval():
    with pytest.raises(ValueError):
        formats.pgm_text(np.array([[0, 5]]), 3)


def test_ppm_uses_fixed_palette(tmp_path):
    labels = np.array([[0, 1], [9, 3]])
    path = formats.write_text(tmp_path / "a.ppm", formats.ppm_text(labels))
    assert path.read_text().startswith("P3\n2 2\n255\n")
    magic, rgb, _ = formats.read_netpbm(path)
    assert magic == "P3"
    assert tuple(rgb[0, 0]) == formats.PALETTE[0]
    assert tuple(rgb[1, 0]) == formats.PALETTE[9 % 8]
    assert len(formats.PALETTE) == 8


def test_csv_text_formats_floats_and_bools():
    text = formats.csv_text(("a", "b", "c"), [(1, 0.1, True)])
    assert text == "a,b,c\n1,0.1,true\n"
