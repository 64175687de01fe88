"""Reduced words in a free group and endomorphisms given by generator images.

Letters are nonzero integers: generator ``i`` (0-based) is ``i + 1`` and its
inverse is ``-(i + 1)``.  The text layer writes generators in lowercase and
their inverses in uppercase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import ParseError


def _free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if x == 0:
            raise ValueError("0 is not a letter")
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Word:
    """A freely reduced word.  The empty word is the identity."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _free_reduce(self.letters))

    @classmethod
    def _trusted(cls, letters: tuple[int, ...]) -> "Word":
        w = object.__new__(cls)
        object.__setattr__(w, "letters", letters)
        return w

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Word._trusted(self.letters[index])
        return self.letters[index]

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        a, b = self.letters, other.letters
        k = 0
        n = min(len(a), len(b))
        while k < n and a[-1 - k] == -b[k]:
            k += 1
        return Word._trusted(a[: len(a) - k] + b[k:])

    def __invert__(self) -> "Word":
        return Word._trusted(tuple(-x for x in reversed(self.letters)))

    inverse = __invert__

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return (~self) ** (-n)
        core, conj = cyclic_reduce(self)
        return conj * Word._trusted(core.letters * n) * ~conj

    def is_cyclically_reduced(self) -> bool:
        return len(self.letters) < 2 or self.letters[0] != -self.letters[-1]

    def rotate(self, k: int) -> "Word":
        """Cyclic rotation moving the first ``k`` letters to the end."""
        k %= max(len(self.letters), 1)
        return Word._trusted(self.letters[k:] + self.letters[:k])

    def __repr__(self) -> str:
        return f"Word({self.letters!r})"


IDENTITY = Word()


def reduce(raw: Iterable[int]) -> Word:
    return Word(tuple(raw))


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(core, conjugator)`` with ``w = conjugator * core * conjugator**-1``."""
    letters = w.letters
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    return Word._trusted(letters[i : j + 1]), Word._trusted(letters[:i])


def primitive_root(w: Word) -> tuple[Word, int]:
    """For cyclically reduced ``w`` return ``(r, d)`` with ``w = r**d`` and ``d`` maximal."""
    n = len(w)
    if n == 0:
        return w, 1
    for p in range(1, n + 1):
        if n % p == 0 and w.letters == w.letters[:p] * (n // p):
            return Word._trusted(w.letters[:p]), n // p
    raise AssertionError("unreachable")


def _is_rotation(u: tuple[int, ...], v: tuple[int, ...]) -> bool:
    if len(u) != len(v):
        return False
    if not u:
        return True
    doubled = u + u
    # substring search on tuples; words here are short enough for the naive scan
    n = len(v)
    first = v[0]
    for k in range(len(u)):
        if doubled[k] == first and doubled[k : k + n] == v:
            return True
    return False


def conjugate_test(u: Word, v: Word) -> bool:
    """True iff ``u`` and ``v`` are conjugate."""
    cu, _ = cyclic_reduce(u)
    cv, _ = cyclic_reduce(v)
    return _is_rotation(cu.letters, cv.letters)


def conjugator(u: Word, v: Word) -> Word | None:
    """Some ``w`` with ``u = w * v * w**-1``, or None if not conjugate."""
    cu, du = cyclic_reduce(u)
    cv, dv = cyclic_reduce(v)
    if len(cu) != len(cv):
        return None
    if not cu:
        return IDENTITY
    for k in range(len(cv)):
        if cv.rotate(k) == cu:
            # cu = p^-1 cv p with p = cv[:k]
            return du * ~cv[:k] * ~dv
    return None


def common_conjugator(xs: Sequence[Word], ys: Sequence[Word]) -> Word | None:
    """Find ``w`` with ``xs[i] == w * ys[i] * w**-1`` for every ``i``.

    Exact: the conjugators of the first nontrivial pair form a coset of a
    cyclic centralizer ``{w0 * r**k}``; the remaining pairs pin ``k`` within
    a range bounded by the total input length.
    """
    if len(xs) != len(ys):
        raise ValueError("tuples of different lengths")
    pairs = list(zip(xs, ys))
    for x, y in pairs:
        if bool(x) != bool(y) or len(cyclic_reduce(x)[0]) != len(cyclic_reduce(y)[0]):
            return None
    nontrivial = [(x, y) for x, y in pairs if y]
    if not nontrivial:
        return IDENTITY
    x1, y1 = nontrivial[0]
    cx, d = cyclic_reduce(x1)
    cy, c = cyclic_reduce(y1)
    root, _ = primitive_root(cy)
    rest = nontrivial[1:]
    bound = 3 * sum(len(x) + len(y) for x, y in pairs) + 4
    seen: set[Word] = set()
    for k in range(len(root)):
        if cy.rotate(k) != cx:
            continue
        base = d * ~cy[:k]
        if not rest:
            return base * ~c
        for j in sorted(range(-bound, bound + 1), key=abs):
            w = base * root**j * ~c
            if w in seen:
                continue
            seen.add(w)
            if all(w * y * ~w == x for x, y in rest):
                return w
    return None


@dataclass(frozen=True)
class Basis:
    """Ordered generator names of a free group of rank >= 2."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValueError("a basis needs at least two generators")
        if len(set(names)) != len(names):
            raise ValueError(f"generator names are not distinct: {names}")
        for n in names:
            if not (n.isalpha() and n.islower()):
                raise ValueError(f"generator name {n!r} must be lowercase letters")

    @classmethod
    def standard(cls, rank: int) -> "Basis":
        if rank > 26:
            raise ValueError("standard names only go up to rank 26")
        return cls(tuple("abcdefghijklmnopqrstuvwxyz"[:rank]))

    @property
    def rank(self) -> int:
        return len(self.names)

    def letter(self, token: str) -> int:
        if token in self.names:
            return self.names.index(token) + 1
        if token.lower() in self.names and token.isupper():
            return -(self.names.index(token.lower()) + 1)
        raise ParseError(f"unknown symbol {token!r}")

    def token(self, letter: int) -> str:
        name = self.names[abs(letter) - 1]
        return name if letter > 0 else name.upper()

    def parse(self, text: str) -> Word:
        """Parse ``"abA"`` (single-letter names) or ``"a b A"`` (tokens)."""
        text = text.strip()
        if text in ("", "1", "ε"):
            return IDENTITY
        if any(ch.isspace() for ch in text) or any(len(n) > 1 for n in self.names):
            tokens = text.split()
        else:
            tokens = list(text)
        return Word(tuple(self.letter(t) for t in tokens))

    def format(self, w: Word, sep: str | None = None) -> str:
        if not w:
            return "1"
        if sep is None:
            sep = "" if all(len(n) == 1 for n in self.names) else " "
        return sep.join(self.token(x) for x in w)

    def generators(self) -> list[Word]:
        return [Word._trusted((i + 1,)) for i in range(self.rank)]


@dataclass(frozen=True)
class Endomorphism:
    """An endomorphism of the free group on ``basis``, given by generator images."""

    basis: Basis
    images: tuple[Word, ...]

    def __post_init__(self):
        images = tuple(w if isinstance(w, Word) else Word(tuple(w)) for w in self.images)
        object.__setattr__(self, "images", images)
        if len(images) != self.basis.rank:
            raise ValueError(f"expected {self.basis.rank} images, got {len(images)}")
        for w in images:
            if any(abs(x) > self.basis.rank for x in w):
                raise ValueError(f"image {w} uses letters outside the basis")

    @classmethod
    def from_strings(cls, images: Sequence[str], names: Sequence[str] | None = None):
        basis = Basis(tuple(names)) if names else Basis.standard(len(images))
        return cls(basis, tuple(basis.parse(s) for s in images))

    @classmethod
    def identity(cls, basis: Basis) -> "Endomorphism":
        return cls(basis, tuple(basis.generators()))

    @property
    def rank(self) -> int:
        return self.basis.rank

    def __call__(self, w: Word) -> Word:
        return apply_endo(self, w)

    def compose(self, other: "Endomorphism") -> "Endomorphism":
        """``self ∘ other``: apply ``other`` first."""
        return Endomorphism(self.basis, tuple(self(w) for w in other.images))

    def power(self, n: int) -> "Endomorphism":
        result = Endomorphism.identity(self.basis)
        for _ in range(n):
            result = self.compose(result)
        return result

    def twisted(self, g: Word) -> "Endomorphism":
        """The endomorphism ``x -> g * self(x) * g**-1``."""
        return Endomorphism(self.basis, tuple(g * w * ~g for w in self.images))

    def format(self) -> str:
        return ", ".join(
            f"{n} -> {self.basis.format(w)}" for n, w in zip(self.basis.names, self.images)
        )


def apply_endo(e: Endomorphism, w: Word) -> Word:
    out: list[int] = []
    for x in w:
        img = e.images[abs(x) - 1].letters
        if x < 0:
            img = tuple(-y for y in reversed(img))
        for y in img:
            if out and out[-1] == -y:
                out.pop()
            else:
                out.append(y)
    return Word._trusted(tuple(out))


def translation_length_estimate(e: Endomorphism, w: Word, n: int, lam: float) -> list[float]:
    """``lam**-i * |cyclic core of e^i(w)|`` for ``i = 1..n``."""
    if lam <= 1:
        raise ValueError("stretch factor must exceed 1")
    if n < 1:
        raise ValueError("need at least one iteration")
    out = []
    cur = w
    for i in range(1, n + 1):
        cur = e(cur)
        cur = cyclic_reduce(cur)[0]
        out.append(len(cur) / lam**i)
    return out


def reduced_words(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of the given length, in lexicographic letter order.

    Letters are ordered ``a < A < b < B < ...``.
    """
    alphabet = [s * i for i in range(1, rank + 1) for s in (1, -1)]
    if length == 0:
        yield IDENTITY
        return

    def extend(prefix: tuple[int, ...]):
        if len(prefix) == length:
            yield Word._trusted(prefix)
            return
        for x in alphabet:
            if prefix and prefix[-1] == -x:
                continue
            yield from extend(prefix + (x,))

    yield from extend(())


def cyclically_reduced_words(rank: int, length: int) -> Iterator[Word]:
    for w in reduced_words(rank, length):
        if w.is_cyclically_reduced():
            yield w


def ball(rank: int, radius: int) -> Iterator[Word]:
    for n in range(radius + 1):
        yield from reduced_words(rank, n)


def abelianization(w: Word, rank: int) -> tuple[int, ...]:
    counts = [0] * rank
    for x in w:
        counts[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(counts)


__all__ = [
    "Word",
    "IDENTITY",
    "Basis",
    "Endomorphism",
    "reduce",
    "apply_endo",
    "cyclic_reduce",
    "conjugate_test",
    "conjugator",
    "common_conjugator",
    "primitive_root",
    "translation_length_estimate",
    "reduced_words",
    "cyclically_reduced_words",
    "ball",
    "abelianization",
]
