"""Gate sets, gate words and reduced-word enumeration."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .group import IDENTITY, Unitary2, dagger, from_axis_angle, multiply, op_distance

__all__ = [
    "Generator",
    "GateSet",
    "GateWord",
    "WordCapExceeded",
    "clifford_t",
    "clifford_t_paulis",
    "enumerate_words",
    "DEFAULT_WORD_CAP",
]

DEFAULT_WORD_CAP = 5_000_000

# Spellings accepted when parsing words.
_ALIASES = {"T†": "Tdg", "Tdag": "Tdg", "T^dag": "Tdg", "S†": "Sdg", "Sdag": "Sdg"}


class WordCapExceeded(RuntimeError):
    """Enumeration would produce more entries than the configured cap."""


@dataclass(frozen=True)
class Generator:
    name: str
    unitary: Unitary2
    t_weight: int = 0


@dataclass(frozen=True)
class GateSet:
    """A finite inverse-closed generating set.

    ``inverse[i]`` is the index of the inverse of generator ``i``.
    """

    generators: tuple[Generator, ...]
    inverse: tuple[int, ...]

    def __post_init__(self):
        if len(self.inverse) != len(self.generators):
            raise ValueError("inverse map must cover every generator")
        for i, j in enumerate(self.inverse):
            if self.inverse[j] != i:
                raise ValueError(f"inverse map is not an involution at {i}")
            prod = multiply(self.generators[i].unitary, self.generators[j].unitary)
            if op_distance(prod, IDENTITY) > 1e-12:
                raise ValueError(
                    f"{self.generators[j].name} is not the inverse of {self.generators[i].name}"
                )

    def __len__(self) -> int:
        return len(self.generators)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def index(self, name: str) -> int:
        name = _ALIASES.get(name, name)
        for i, g in enumerate(self.generators):
            if g.name == name:
                return i
        raise KeyError(f"gate set has no generator named {name!r}")

    def has(self, name: str) -> bool:
        try:
            self.index(name)
        except KeyError:
            return False
        return True

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=8)
        for g, inv in zip(self.generators, self.inverse):
            h.update(g.name.encode())
            h.update(repr(g.unitary.q).encode())
            h.update(f"{g.t_weight}:{inv};".encode())
        return h.hexdigest()

    def word(self, indices: Iterable[int] = ()) -> "GateWord":
        """Build a word from generator indices, computing its unitary."""
        indices = tuple(int(i) for i in indices)
        u = IDENTITY
        for i in indices:
            u = multiply(u, self.generators[i].unitary)
        return GateWord(indices, u, self)

    def parse(self, text: str | Sequence[str]) -> "GateWord":
        """Parse ``"H T H Tdg"`` (or a list of names) into a word."""
        names = text.split() if isinstance(text, str) else list(text)
        return self.word(self.index(n) for n in names)

    def identity(self) -> "GateWord":
        return GateWord((), IDENTITY, self)


@dataclass(frozen=True)
class GateWord:
    """A sequence of generator indices and its cached product.

    The unitary is the matrix product of the generators in the order written,
    so the LAST index acts first on a state.
    """

    indices: tuple[int, ...]
    unitary: Unitary2
    gateset: GateSet = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    def length(self) -> int:
        return len(self.indices)

    def t_count(self) -> int:
        gens = self.gateset.generators
        return sum(gens[i].t_weight for i in self.indices)

    def names(self) -> list[str]:
        gens = self.gateset.generators
        return [gens[i].name for i in self.indices]

    def __str__(self) -> str:
        return " ".join(self.names())

    def inverse(self) -> "GateWord":
        inv = self.gateset.inverse
        return GateWord(tuple(inv[i] for i in reversed(self.indices)), dagger(self.unitary), self.gateset)

    def __add__(self, other: "GateWord") -> "GateWord":
        return concat(self, other)

    def refold(self) -> Unitary2:
        """Recompute the product from scratch (drift check)."""
        return self.gateset.word(self.indices).unitary


def concat(*words: GateWord) -> GateWord:
    """Concatenate words, cancelling generator/inverse pairs at the seams."""
    if not words:
        raise ValueError("need at least one word")
    gs = words[0].gateset
    inv = gs.inverse
    out: list[int] = list(words[0].indices)
    u = words[0].unitary
    for w in words[1:]:
        idx = w.indices
        k = 0
        while out and k < len(idx) and inv[out[-1]] == idx[k]:
            out.pop()
            k += 1
        out.extend(idx[k:])
        u = multiply(u, w.unitary)
    return GateWord(tuple(out), u, gs)


def _builtin(names_gates: list[tuple[str, Unitary2, int]], pairs: dict[str, str]) -> GateSet:
    names = [n for n, _, _ in names_gates]
    gens = tuple(Generator(n, u, t) for n, u, t in names_gates)
    inverse = tuple(names.index(pairs[n]) for n in names)
    return GateSet(gens, inverse)


def _h() -> Unitary2:
    return from_axis_angle((1.0, 0.0, 1.0), math.pi)


def _t() -> Unitary2:
    return from_axis_angle((0.0, 0.0, 1.0), math.pi / 4)


def clifford_t() -> GateSet:
    """The core set {H, T, Tdg} (T-weight 1 on T and Tdg)."""
    t = _t()
    return _builtin(
        [("H", _h(), 0), ("T", t, 1), ("Tdg", dagger(t), 1)],
        {"H": "H", "T": "Tdg", "Tdg": "T"},
    )


def clifford_t_paulis() -> GateSet:
    """{H, T, Tdg} plus the named composites S, Sdg, X, Y, Z."""
    t = _t()
    s = multiply(t, t)
    return _builtin(
        [
            ("H", _h(), 0),
            ("T", t, 1),
            ("Tdg", dagger(t), 1),
            ("S", s, 0),
            ("Sdg", dagger(s), 0),
            ("X", from_axis_angle((1.0, 0.0, 0.0), math.pi), 0),
            ("Y", from_axis_angle((0.0, 1.0, 0.0), math.pi), 0),
            ("Z", from_axis_angle((0.0, 0.0, 1.0), math.pi), 0),
        ],
        {"H": "H", "T": "Tdg", "Tdg": "T", "S": "Sdg", "Sdg": "S", "X": "X", "Y": "Y", "Z": "Z"},
    )


def _dedup_key(u: Unitary2) -> tuple[int, ...]:
    return tuple(int(round(x * 1e8)) for x in u.q)


def enumerate_words(gs: GateSet, max_len: int, cap: int = DEFAULT_WORD_CAP) -> list[GateWord]:
    """All distinct unitaries reachable by reduced words of length <= ``max_len``.

    Words never contain a generator followed by its inverse. Each distinct
    unitary (projective tolerance 1e-9) keeps its shortest word, ties going
    to the lexicographically smallest index sequence. The identity word is
    always entry 0.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    inv = gs.inverse
    gens = [g.unitary for g in gs.generators]
    out: list[GateWord] = [gs.identity()]
    buckets: dict[tuple[int, ...], list[int]] = {_dedup_key(IDENTITY): [0]}
    frontier: list[tuple[tuple[int, ...], Unitary2]] = [((), IDENTITY)]
    visited = 1
    for _ in range(max_len):
        nxt = []
        for word, u in frontier:
            last = word[-1] if word else -1
            for g, gu in enumerate(gens):
                if last >= 0 and inv[last] == g:
                    continue
                nw = word + (g,)
                nu = multiply(u, gu)
                nxt.append((nw, nu))
                visited += 1
                if visited > cap:
                    raise WordCapExceeded(
                        f"enumeration exceeded cap of {cap} words at length {len(nw)}; "
                        "lower max_len or raise the cap"
                    )
                if not _seen(nu, out, buckets):
                    buckets.setdefault(_dedup_key(nu), []).append(len(out))
                    out.append(GateWord(nw, nu, gs))
        frontier = nxt
    return out


def _seen(u: Unitary2, out: list[GateWord], buckets: dict) -> bool:
    # Neighbouring rounding cells are probed so near-boundary duplicates still match.
    key = _dedup_key(u)
    for dk in _offsets():
        cand = buckets.get(tuple(k + o for k, o in zip(key, dk)))
        if cand:
            for j in cand:
                if op_distance(out[j].unitary, u) <= 1e-9:
                    return True
    return False


_OFFSETS: list[tuple[int, ...]] = []


def _offsets() -> list[tuple[int, ...]]:
    if not _OFFSETS:
        import itertools

        _OFFSETS.extend(itertools.product((0, -1, 1), repeat=4))
    return _OFFSETS
