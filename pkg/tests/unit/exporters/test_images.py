"""Tests for PPM/PGM dumps."""

import numpy as np
import pytest
from PIL import Image

from mcn_seg.exceptions import ShapeMismatchError
from mcn_seg.exporters.images import export_sample, write_image_ppm, write_label_pgm


@pytest.mark.unit
class TestImages:
    """Test suite for image and label writers."""

    def test_ppm_header_and_pixels(self, tmp_path):
        """Binary P6 with 0..255 colours."""
        image = np.zeros((3, 2, 2))
        image[0] = 1.0
        path = write_image_ppm(tmp_path / "x.ppm", image)
        assert path.read_bytes().startswith(b"P6")
        pixels = np.asarray(Image.open(path))
        assert pixels.shape == (2, 2, 3)
        assert pixels[0, 0].tolist() == [255, 0, 0]

    def test_pgm_keeps_indices(self, tmp_path):
        """Binary P5 with raw class indices."""
        label = np.array([[0, 1], [2, 255]], dtype=np.uint8)
        path = write_label_pgm(tmp_path / "y.pgm", label)
        assert path.read_bytes().startswith(b"P5")
        np.testing.assert_array_equal(np.asarray(Image.open(path)), label)

    def test_export_sample(self, tmp_path):
        """Image and label share a stem."""
        ppm, pgm = export_sample(
            tmp_path, "s0", np.zeros((3, 4, 4)), np.zeros((4, 4), np.uint8)
        )
        assert (ppm.name, pgm.name) == ("s0.ppm", "s0.pgm")

    def test_shapes_checked(self, tmp_path):
        """Images are (3, h, w) and labels (h, w)."""
        with pytest.raises(ShapeMismatchError):
            write_image_ppm(tmp_path / "x.ppm", np.zeros((4, 4)))
        with pytest.raises(ShapeMismatchError):
            write_label_pgm(tmp_path / "y.pgm", np.zeros((1, 4, 4)))
