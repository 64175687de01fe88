import functools
import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from freeendo.words import Basis, Endomorphism, Word

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


# ------------------------------------------------------------------ examples

THUE_MORSE = Endomorphism.from_strings(["ab", "ba"])
BS13 = Endomorphism.from_strings(["aba", "bab"])
REDUCIBLE = Endomorphism.from_strings(["aba", "cc", "cabac"])
RESTRICTED = Endomorphism.from_strings(["xccx", "cxc"], ["x", "c"])


@pytest.fixture
def thue_morse():
    return THUE_MORSE


@pytest.fixture
def bs13():
    return BS13


@pytest.fixture
def reducible():
    return REDUCIBLE


@pytest.fixture
def restricted():
    return RESTRICTED


# ------------------------------------------------------------------ strategies


def word_strategy(rank, max_len=8, min_len=0):
    letters = st.sampled_from([s * i for i in range(1, rank + 1) for s in (1, -1)])
    return st.lists(letters, min_size=min_len, max_size=max_len).map(lambda xs: Word(tuple(xs)))


def nielsen_automorphism(rank, moves, rng):
    """A random automorphism as a product of elementary Nielsen moves."""
    images = [Word((i + 1,)) for i in range(rank)]
    for _ in range(moves):
        i = rng.randrange(rank)
        kind = rng.randrange(3)
        if kind == 0:
            images[i] = ~images[i]
        else:
            j = rng.choice([k for k in range(rank) if k != i])
            images[i] = images[i] * images[j] if kind == 1 else images[j] * images[i]
    return Endomorphism(Basis.standard(rank), tuple(images))


@st.composite
def automorphisms(draw, rank=None, max_moves=6):
    r = rank or draw(st.integers(2, 3))
    seed = draw(st.integers(0, 2**32 - 1))
    moves = draw(st.integers(0, max_moves))
    return nielsen_automorphism(r, moves, random.Random(seed))


def random_endomorphism(rank, rng, max_len=4, positive=False):
    letters = [i for i in range(1, rank + 1)] + ([] if positive else [-i for i in range(1, rank + 1)])
    images = []
    for _ in range(rank):
        w = Word()
        while not w:
            w = Word(tuple(rng.choice(letters) for _ in range(rng.randint(1, max_len))))
        images.append(w)
    return Endomorphism(Basis.standard(rank), tuple(images))


@functools.cache
def corpus():
    """Named examples plus seeded random endomorphisms, as (name, endomorphism) pairs."""
    out = [("thue_morse", THUE_MORSE), ("bs13", BS13), ("reducible", REDUCIBLE), ("restricted", RESTRICTED)]
    out += [
        ("swap", Endomorphism.from_strings(["b", "a"])),
        ("nielsen", Endomorphism.from_strings(["ab", "b"])),
        ("fibonacci", Endomorphism.from_strings(["ab", "a"])),
        ("triangular", Endomorphism.from_strings(["a", "ba"])),
        ("cube", Endomorphism.from_strings(["aab", "bba"])),
        ("rank3", Endomorphism.from_strings(["ab", "bc", "ca"])),
    ]
    rng = random.Random(20240611)
    for i in range(30):
        out.append((f"pos{i}", random_endomorphism(rng.choice([2, 3]), rng, positive=True)))
    for i in range(30):
        out.append((f"mixed{i}", random_endomorphism(rng.choice([2, 3]), rng, max_len=3)))
    return tuple(out)


# ------------------------------------------------------------------ acceptance summary

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str = "") -> None:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = "; ".join(x for x in (prev[1], detail) if x)
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
