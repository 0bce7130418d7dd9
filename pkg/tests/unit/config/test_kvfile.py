"""Tests for key=value configuration files."""

import pytest

from mcn_seg.config.kvfile import (
    format_kv,
    format_value,
    parse_kv,
    read_kv,
    split_list,
    write_kv,
)
from mcn_seg.exceptions import ConfigError


@pytest.mark.unit
class TestParseKv:
    """Test suite for parse_kv."""

    def test_comments_and_blank_lines(self):
        """Full-line and trailing comments are dropped."""
        text = "# header\n\nseed = 3\nvariant=mcn  # the default\n"
        assert parse_kv(text) == {"seed": "3", "variant": "mcn"}

    def test_value_may_contain_equals(self):
        """Only the first '=' separates key and value."""
        assert parse_kv("expr=a=b") == {"expr": "a=b"}

    def test_missing_separator_reports_line(self):
        """Errors carry source and line number."""
        with pytest.raises(ConfigError, match="run.cfg:2"):
            parse_kv("seed=1\nnonsense\n", source="run.cfg")

    def test_duplicate_key(self):
        """Each key once."""
        with pytest.raises(ConfigError, match="duplicate"):
            parse_kv("seed=1\nseed=2")

    def test_empty_key(self):
        """Keys are required."""
        with pytest.raises(ConfigError):
            parse_kv("=3")


@pytest.mark.unit
class TestFormatting:
    """Test suite for value formatting and file IO."""

    @pytest.mark.parametrize(
        "value, text",
        [
            (True, "true"),
            (False, "false"),
            ([1, 2, 4], "1,2,4"),
            (0.5, "0.5"),
            (None, ""),
            ("mcn", "mcn"),
            (7, "7"),
        ],
    )
    def test_format_value(self, value, text):
        """Booleans, lists and numbers in file form."""
        assert format_value(value) == text

    def test_header_lines_commented(self):
        """Headers become comment lines."""
        text = format_kv({"a": 1}, header="line one\nline two")
        assert text == "# line one\n# line two\na=1\n"

    def test_write_then_read(self, tmp_path):
        """Written files parse back to the formatted strings."""
        path = write_kv(tmp_path / "sub" / "x.cfg", {"rates": [1, 2], "mpn": False})
        assert read_kv(path) == {"rates": "1,2", "mpn": "false"}

    def test_read_missing_file(self, tmp_path):
        """Missing files are configuration errors."""
        with pytest.raises(ConfigError, match="not found"):
            read_kv(tmp_path / "absent.cfg")

    def test_split_list(self):
        """Whitespace and empty items are dropped."""
        assert split_list(" a, b ,,c ") == ["a", "b", "c"]
