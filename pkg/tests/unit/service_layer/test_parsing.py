import pytest

from blinky_bss.domain import exceptions, model
from blinky_bss.service_layer import parsing


class TestParseAlgorithm:
    @pytest.mark.parametrize(
        "name,expected_algorithm",
        [
            ("auxiva", model.Algorithm.AUXIVA),
            ("blinkiva", model.Algorithm.BLINKIVA),
            (" BlinkIVA ", model.Algorithm.BLINKIVA),
        ],
    )
    def test_parse_valid_names(self, name: str, expected_algorithm: model.Algorithm):
        result = parsing.parse_algorithm(name)
        assert result == expected_algorithm

    @pytest.mark.parametrize("invalid_name", ["ilrma", None, ""])
    def test_parse_invalid_name_raises_exception(self, invalid_name: str | None):
        with pytest.raises(exceptions.UnsupportedAlgorithmError, match="auxiva, blinkiva"):
            _ = parsing.parse_algorithm(invalid_name)
