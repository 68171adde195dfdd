import numpy as np
import pytest

from enora_aode.dataset import MISSING, dataset_from_codes

D4_CODES = [[0, 0], [0, 1], [1, 0], [1, 1]]
D4_Y = [0, 0, 1, 1]


@pytest.fixture
def d4():
    return dataset_from_codes(D4_CODES, D4_Y, [2, 2], 2, name="d4")


def random_nominal(rng, n_rows=None, n_attrs=None, max_values=4, max_classes=3,
                   missing=0.1, name="rand"):
    """Random all-nominal dataset with injected missing cells."""
    n_rows = n_rows or int(rng.integers(5, 201))
    n_attrs = n_attrs or int(rng.integers(1, 7))
    cards = rng.integers(2, max_values + 1, size=n_attrs)
    n_classes = int(rng.integers(2, max_classes + 1))
    codes = np.column_stack([rng.integers(0, c, size=n_rows) for c in cards])
    codes[rng.random(codes.shape) < missing] = MISSING
    y = rng.integers(0, n_classes, size=n_rows)
    return dataset_from_codes(codes, y, cards, n_classes, name=name)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
