"""Curated sentences with hand-checked truth values, one test per file."""
from pathlib import Path

import pytest

from pacqe.formula import free_vars
from pacqe.oracle import oracle_eval
from pacqe.qe_ext import decide
from pacqe.syntax import parse_core

FILES = sorted((Path(__file__).parent / "data").glob("golden_*.pac"))


def _expected(text):
    for line in text.splitlines():
        if line.startswith("; expect:"):
            return line.split(":", 1)[1].strip() == "true"
    raise AssertionError("golden file without an expect line")


@pytest.mark.parametrize("path", FILES, ids=lambda p: p.stem)
def test_golden(path):
    text = path.read_text()
    f = parse_core(text)
    assert not free_vars(f)
    want = _expected(text)
    assert oracle_eval(f, {}) is want
    assert decide(f) is want


def test_enough_sentences():
    assert len(FILES) >= 30
