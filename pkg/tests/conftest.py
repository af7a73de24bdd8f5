import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from qca_lab.core import Config, canonicalize
from qca_lab.library import BINARY, and_rule, from_number, identity, negated_shift, shift, xor
from qca_lab.quantum import Superposition, make_superposition

RULES_DIR = Path(__file__).resolve().parent.parent / "rules"


def injective_rules():
    """Every injective rule the suites run on, both open and not."""
    return [xor(), identity(), shift(), negated_shift(),
            from_number(86, (-1, 0, 1)), from_number(30, (-1, 0, 1))]


def reversible_rules():
    return [identity(), shift(), negated_shift()]


@pytest.fixture
def rules_dir():
    return RULES_DIR


@pytest.fixture
def two_to_one():
    return and_rule()


def configs(alphabet=BINARY, max_len=8, span=6):
    return st.builds(
        lambda off, w: canonicalize(off, w, alphabet.quiescent),
        st.integers(-span, span),
        st.text(alphabet="".join(alphabet.symbols), max_size=max_len),
    )


def amplitudes():
    return st.complex_numbers(min_magnitude=0.05, max_magnitude=2, allow_nan=False, allow_infinity=False)


def superpositions(alphabet=BINARY, max_terms=8):
    pairs = st.lists(st.tuples(configs(alphabet), amplitudes()), min_size=1, max_size=max_terms)
    return pairs.map(_safe_superposition).filter(lambda s: s is not None)


def _safe_superposition(pairs):
    merged = {}
    for c, a in pairs:
        merged[c] = merged.get(c, 0) + a
    if all(abs(a) < 1e-6 for a in merged.values()):
        return None
    return make_superposition(merged.items())


def random_config(rng: random.Random, alphabet=BINARY, max_len=8, span=6) -> Config:
    word = "".join(rng.choice(alphabet.symbols) for _ in range(rng.randint(0, max_len)))
    return canonicalize(rng.randint(-span, span), word, alphabet.quiescent)


def random_superposition(rng: random.Random, alphabet=BINARY, terms=8) -> Superposition:
    """Normalized state over up to ``terms`` random configurations."""
    while True:
        pairs = [(random_config(rng, alphabet), complex(rng.gauss(0, 1), rng.gauss(0, 1)))
                 for _ in range(rng.randint(1, terms))]
        merged = {}
        for c, a in pairs:
            merged[c] = merged.get(c, 0) + a
        if any(abs(a) > 1e-6 for a in merged.values()):
            return make_superposition(merged.items())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
