from pathlib import Path

import pytest
import yaml

from hsecagg.config import example_config, load_config, parse_config
from hsecagg.errors import ParameterError
from hsecagg.scenarios import Caps
from tests.conftest import EXAMPLE_HOLDS


def base():
    return {"K": 6, "assignment": EXAMPLE_HOLDS, "s2": [0, 1], "T": [1, 1]}


def test_example_config():
    cfg = example_config()
    assert (cfg.q, cfg.seed, cfg.K, cfg.U) == (101, 0, 6, 2)
    assert cfg.assignment == EXAMPLE_HOLDS
    assert cfg.dropout_sets() == [frozenset(), frozenset({3})]
    assert cfg.caps == Caps(10000, 1000) and cfg.reading == "pieces"
    assert cfg.to_assignment().V == (2, 4)


def test_repo_config_matches_packaged(tmp_path):
    assert load_config(Path(__file__).parents[1] / "configs" / "example.yaml") == example_config()
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(base()))
    cfg = load_config(p)
    assert cfg.dropouts is None and cfg.lprime == 1


def test_defaults_and_overrides():
    cfg = parse_config({"K": 2, "assignment": [[[1]], [[2]]]})
    assert cfg.s2 == [0, 0] and cfg.T == [0, 0]
    assert cfg.with_overrides(q=7, seed=None).q == 7
    assert cfg.with_overrides(seed=None).seed == 0


@pytest.mark.parametrize(
    "patch, msg",
    [
        ({"bogus": 1}, "unknown keys"),
        ({"U": 3}, "U=3"),
        ({"V": [2, 3]}, "V="),
        ({"s2": [0]}, "s2"),
        ({"T": "1 1"}, "T"),
        ({"dropouts": [[]]}, "dropouts"),
        ({"reading": "sum"}, "reading"),
        ({"assignment": "x"}, "assignment"),
    ],
)
def test_rejects(patch, msg):
    doc = base() | patch
    with pytest.raises(ParameterError, match=msg):
        parse_config(doc)


def test_missing_and_bad_top_level():
    with pytest.raises(ParameterError, match="missing K"):
        parse_config({"assignment": EXAMPLE_HOLDS})
    with pytest.raises(ParameterError):
        parse_config([1, 2])
    with pytest.raises(ParameterError):
        parse_config(base() | {"K": 3})  # dataset 6 out of range
