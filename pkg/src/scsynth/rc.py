"""Randomized compilation: Pauli frames, twirling, ensemble channels, error split."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import polar

from .channel import Channel1Q
from .group import Unitary2, dagger, multiply, op_distance
from .sim import NoiseModel, gate_channel
from .words import GateWord

__all__ = [
    "Channel1Q",
    "ErrorSplit",
    "word_channel",
    "pauli_twirl",
    "dress_word",
    "average_channel",
    "split_error",
    "PAULI_NAMES",
]

PAULI_NAMES = ("I", "X", "Y", "Z")
# Conjugation by I, X, Y, Z flips the sign of the Bloch components that anticommute.
_PAULI_SIGNS = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


class ErrorSplit(NamedTuple):
    coherent_angle: float
    incoherent_infidelity: float


def pauli_twirl(ch: Channel1Q) -> Channel1Q:
    """Average of ``P . ch . P`` over the four Paulis."""
    acc = np.zeros((4, 4))
    for s in _PAULI_SIGNS:
        acc += np.outer(s, s) * ch.ptm
    return Channel1Q(acc / 4.0)


def word_channel(word: GateWord, noise: NoiseModel = NoiseModel(), twirl: bool = False) -> Channel1Q:
    """Channel of the physical implementation of ``word`` under ``noise``.

    With ``twirl`` every gate's error channel (noisy gate after the ideal
    inverse) is Pauli-twirled, the channel-level equivalent of drawing a
    fresh compensated Pauli frame around every gate.
    """
    gens = word.gateset.generators
    ptm = np.eye(4)
    cache: dict[int, np.ndarray] = {}
    for i in reversed(word.indices):
        g = cache.get(i)
        if g is None:
            u = gens[i].unitary
            ch = gate_channel(u, noise)
            if twirl and not noise.is_noiseless:
                ideal = Channel1Q.from_unitary(u).ptm
                err = Channel1Q(ch.ptm @ ideal.T)
                ch = Channel1Q(pauli_twirl(err).ptm @ ideal)
            g = cache[i] = ch.ptm
        ptm = g @ ptm
    return Channel1Q(ptm)


def average_channel(
    words: Sequence[GateWord], noise: NoiseModel = NoiseModel(), twirl: bool = False
) -> Channel1Q:
    if not words:
        raise ValueError("need at least one word")
    return Channel1Q(np.mean([word_channel(w, noise, twirl).ptm for w in words], axis=0))


def split_error(ch: Channel1Q, ideal: Unitary2) -> ErrorSplit:
    """Coherent rotation angle and incoherent infidelity of ``ch`` relative to ``ideal``.

    The error block ``M`` of ``ch . ideal^-1`` is polar-decomposed as
    ``M = O S`` with ``O`` a proper rotation; a reflection, if present, is
    moved into ``S`` along its weakest direction.
    """
    r_ideal = Channel1Q.from_unitary(ideal).ptm
    m = (ch.ptm @ r_ideal.T)[1:, 1:]
    o, s = polar(m, side="right")
    if np.linalg.svd(m, compute_uv=False).min() < 1e-12:
        return ErrorSplit(0.0, float(np.clip(1.0 - np.trace(s) / 3.0, 0.0, 1.0)))
    if np.linalg.det(o) < 0:
        w, v = np.linalg.eigh(s)
        d = np.eye(3) - 2.0 * np.outer(v[:, 0], v[:, 0])
        o, s = o @ d, d @ s
    angle = math.acos(float(np.clip((np.trace(o) - 1.0) / 2.0, -1.0, 1.0)))
    inc = float(np.clip(1.0 - np.trace(s) / 3.0, 0.0, 1.0))
    return ErrorSplit(angle, inc)


# ---------------------------------------------------------------------------
# circuit-level Pauli frames


def _pauli_indices(word: GateWord) -> list[int]:
    gs = word.gateset
    missing = [p for p in PAULI_NAMES[1:] if not gs.has(p)]
    if missing:
        raise ValueError(f"gate set lacks Pauli generators {missing}; use clifford_t_paulis()")
    return [-1] + [gs.index(p) for p in PAULI_NAMES[1:]]


def _as_pauli(u: Unitary2, word: GateWord, paulis: list[int]) -> int | None:
    gens = word.gateset.generators
    for k, j in enumerate(paulis):
        ref = gens[j].unitary if j >= 0 else Unitary2((1.0, 0.0, 0.0, 0.0))
        if op_distance(u, ref) < 1e-12:
            return k
    return None


def dress_word(
    word: GateWord,
    rng: np.random.Generator,
    boundary_only: bool = False,
    frames: list[int] | None = None,
) -> GateWord:
    """Insert a random Pauli before every gate and compensate it after the gate.

    For a gate ``g`` and frame ``P`` the compensator is ``g P g^dag``. It is a
    Pauli when ``g`` is Clifford; otherwise it is emitted as the exact
    three-gate word ``g P g^-1``, or, with ``boundary_only``, the frame at
    that gate is dropped. Drawn frame indices (0..3 for I, X, Y, Z) are
    appended to ``frames`` when given.
    """
    paulis = _pauli_indices(word)
    gs = word.gateset
    gens = gs.generators
    out: list[int] = []
    for i in word.indices:
        k = int(rng.integers(4))
        if frames is not None:
            frames.append(k)
        if k == 0:
            out.append(i)
            continue
        p = paulis[k]
        g = gens[i].unitary
        comp = multiply(multiply(g, gens[p].unitary), dagger(g))
        c = _as_pauli(comp, word, paulis)
        if c is not None:
            out.extend(([paulis[c]] if c else []) + [i, p])
        elif boundary_only:
            out.append(i)
        else:
            out.extend([i, p, gs.inverse[i], i, p])
    return gs.word(out)
