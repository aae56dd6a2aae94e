"""Stochastic epsilon-net: K representatives per neighbourhood with k-nearest lookup."""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .group import Unitary2, haar_random, op_distance
from .words import (
    DEFAULT_WORD_CAP,
    GateSet,
    GateWord,
    Generator,
    clifford_t,
    enumerate_words,
)

__all__ = [
    "EpsilonNet",
    "NetCoverageError",
    "NetFileError",
    "NetFormatError",
    "NetTruncatedError",
    "NetVersionError",
    "NetChecksumError",
    "build_net",
    "default_net",
    "nearest",
    "linear_nearest",
    "save_net",
    "load_net",
    "coverage_radius",
    "MAGIC",
]

MAGIC = "SCSNET1"
COVERAGE_SAMPLES = 10_000
COVERAGE_SEED = 20240611


class NetCoverageError(RuntimeError):
    def __init__(self, message: str, sample: Unitary2, distance: float):
        super().__init__(message)
        self.sample = sample
        self.distance = distance


class NetFileError(ValueError):
    pass


class NetFormatError(NetFileError):
    pass


class NetTruncatedError(NetFileError):
    pass


class NetVersionError(NetFileError):
    pass


class NetChecksumError(NetFileError):
    pass


@dataclass(frozen=True)
class EpsilonNet:
    """Gate words indexed for nearest-neighbour queries in the quaternion embedding.

    ``coverage`` is the largest nearest-entry distance seen on a fixed
    Haar sample at build time (the measured covering radius).
    """

    gateset: GateSet
    entries: tuple[GateWord, ...]
    eps0: float
    k_reps: int
    max_len: int
    coverage: float = field(default=float("nan"), compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def _points(self) -> np.ndarray:
        return np.array([w.unitary.q for w in self.entries], dtype=float)

    @cached_property
    def _tree(self) -> cKDTree:
        # Both signs are indexed so Euclidean distance equals the projective one.
        pts = self._points
        return cKDTree(np.vstack([pts, -pts]))

    @property
    def longest(self) -> int:
        return max(len(w) for w in self.entries)


def _cell(q: tuple[float, ...], side: float) -> tuple[int, ...]:
    return tuple(math.floor(x / side) for x in q)


def build_net(
    gs: GateSet,
    eps0: float,
    k_reps: int,
    max_len: int,
    *,
    cap: int = DEFAULT_WORD_CAP,
    coverage_samples: int = COVERAGE_SAMPLES,
    seed: int = COVERAGE_SEED,
) -> EpsilonNet:
    """Enumerate reduced words and keep up to ``k_reps`` shortest per cell.

    Cells are axis-aligned boxes of side ``eps0/2`` in quaternion space.
    Coverage is then checked over the whole group: every Haar sample must
    have an entry within ``eps0``.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    if k_reps < 1:
        raise ValueError("k_reps must be >= 1")
    words = enumerate_words(gs, max_len, cap=cap)
    side = eps0 / 2.0
    cells: dict[tuple[int, ...], int] = {}
    kept: list[GateWord] = []
    # enumerate_words yields words in (length, lexicographic) order.
    for w in words:
        key = _cell(w.unitary.q, side)
        n = cells.get(key, 0)
        if n < k_reps:
            cells[key] = n + 1
            kept.append(w)
    net = EpsilonNet(gs, tuple(kept), float(eps0), int(k_reps), int(max_len))
    radius, worst = coverage_radius(net, coverage_samples, seed)
    if radius > eps0:
        raise NetCoverageError(
            f"net with max_len={max_len} misses sample {worst!r} by {radius:.4g} > eps0={eps0}; "
            "increase max_len",
            worst,
            radius,
        )
    return EpsilonNet(gs, tuple(kept), float(eps0), int(k_reps), int(max_len), radius)


def coverage_radius(net: EpsilonNet, samples: int = COVERAGE_SAMPLES, seed: int = COVERAGE_SEED):
    """Largest nearest-entry distance over ``samples`` Haar targets, and the worst target."""
    rng = np.random.default_rng(seed)
    targets = [haar_random(rng) for _ in range(samples)]
    pts = np.array([t.q for t in targets])
    dist, _ = net._tree.query(pts, k=1)
    i = int(np.argmax(dist))
    return float(dist[i]), targets[i]


def default_net() -> EpsilonNet:
    """The reference net: {H, T, Tdg}, eps0 = 0.3, K = 16, words up to length 10."""
    return _default_net_cached()


_DEFAULT: list[EpsilonNet] = []


def _default_net_cached() -> EpsilonNet:
    if not _DEFAULT:
        _DEFAULT.append(build_net(clifford_t(), 0.3, 16, 10))
    return _DEFAULT[0]


def nearest(net: EpsilonNet, target: Unitary2, k: int = 1) -> list[tuple[GateWord, float]]:
    """The ``k`` entries closest to ``target`` in projective operator distance.

    Ties are broken by shorter word, then by index sequence.
    """
    n = len(net.entries)
    k = min(k, n)
    probe = min(2 * n, 2 * k + 8)
    while True:
        _, idx = net._tree.query(target.q, k=probe)
        idx = np.atleast_1d(idx)
        seen: dict[int, float] = {}
        for i in idx:
            j = int(i) % n
            if j not in seen:
                seen[j] = op_distance(net.entries[j].unitary, target)
        if len(seen) >= k or probe >= 2 * n:
            break
        probe = min(2 * n, probe * 2)
    ranked = sorted(seen.items(), key=lambda jd: (jd[1], len(net.entries[jd[0]]), net.entries[jd[0]].indices))
    # Unprobed entries lie at or beyond the farthest probed one; a tie there needs a full scan.
    if probe < 2 * n and ranked[k - 1][1] >= ranked[-1][1] - 1e-12:
        return linear_nearest(net, target, k)
    return [(net.entries[j], d) for j, d in ranked[:k]]


def linear_nearest(net: EpsilonNet, target: Unitary2, k: int = 1) -> list[tuple[GateWord, float]]:
    """Exhaustive-scan reference for :func:`nearest`."""
    scored = [(op_distance(w.unitary, target), len(w), w.indices, w) for w in net.entries]
    scored.sort(key=lambda s: s[:3])
    return [(s[3], s[0]) for s in scored[:k]]


# ---------------------------------------------------------------------------
# file format


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _matrix_fields(u: Unitary2) -> list[str]:
    m = u.matrix
    return [_fmt(v) for z in (m[0, 0], m[0, 1], m[1, 0], m[1, 1]) for v in (z.real, z.imag)]


def _matrix_from_fields(fields: list[str]) -> np.ndarray:
    v = [float(f) for f in fields]
    return np.array([[complex(v[0], v[1]), complex(v[2], v[3])], [complex(v[4], v[5]), complex(v[6], v[7])]])


def save_net(net: EpsilonNet, path: str | os.PathLike) -> None:
    gs = net.gateset
    lines = [
        MAGIC,
        f"eps0 {_fmt(net.eps0)}",
        f"k_reps {net.k_reps}",
        f"max_len {net.max_len}",
        f"coverage {_fmt(net.coverage)}",
        f"gateset {gs.fingerprint()} {len(gs)}",
    ]
    for g, inv in zip(gs.generators, gs.inverse):
        lines.append(" ".join([g.name, gs.generators[inv].name, str(g.t_weight), *_matrix_fields(g.unitary)]))
    lines.append(f"entries {len(net.entries)}")
    for w in net.entries:
        lines.append(" ".join(w.names()) + " | " + " ".join(_matrix_fields(w.unitary)))
    body = "\n".join(lines) + "\n"
    digest = hashlib.blake2b(body.encode(), digest_size=8).hexdigest()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(body)
        fh.write(f"checksum {digest}\n")


def load_net(path: str | os.PathLike) -> EpsilonNet:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        text = fh.read()
    if not text.strip():
        raise NetFormatError(f"{path}: empty file")
    first = text.split("\n", 1)[0]
    if first != MAGIC:
        if first.startswith("SCSNET"):
            raise NetVersionError(f"{path}: unsupported net version {first!r} (expected {MAGIC})")
        raise NetFormatError(f"{path}: not a net file (bad magic {first[:16]!r})")
    body, sep, tail = text.rpartition("checksum ")
    if not sep or not body.endswith("\n"):
        raise NetTruncatedError(f"{path}: missing checksum trailer (file truncated?)")
    stored = tail.strip()
    digest = hashlib.blake2b(body.encode(), digest_size=8).hexdigest()
    if stored != digest:
        raise NetChecksumError(f"{path}: checksum mismatch (stored {stored}, computed {digest})")
    try:
        return _parse_body(body.rstrip("\n").split("\n"))
    except (IndexError, ValueError, KeyError) as exc:
        raise NetFormatError(f"{path}: malformed body: {exc}") from exc


def _header(line: str, key: str) -> list[str]:
    parts = line.split()
    if not parts or parts[0] != key:
        raise ValueError(f"expected {key!r}, got {line[:40]!r}")
    return parts[1:]


def _parse_body(lines: list[str]) -> EpsilonNet:
    eps0 = float(_header(lines[1], "eps0")[0])
    k_reps = int(_header(lines[2], "k_reps")[0])
    max_len = int(_header(lines[3], "max_len")[0])
    coverage = float(_header(lines[4], "coverage")[0])
    fp, ngen = _header(lines[5], "gateset")
    ngen = int(ngen)
    rows = [ln.split() for ln in lines[6 : 6 + ngen]]
    names = [r[0] for r in rows]
    gens = tuple(Generator(r[0], Unitary2._from_exact_matrix(_matrix_from_fields(r[3:11])), int(r[2])) for r in rows)
    gs = GateSet(gens, tuple(names.index(r[1]) for r in rows))
    if gs.fingerprint() != fp:
        raise ValueError("gate set fingerprint mismatch")
    count = int(_header(lines[6 + ngen], "entries")[0])
    entry_lines = lines[7 + ngen :]
    if len(entry_lines) != count:
        raise ValueError(f"expected {count} entries, found {len(entry_lines)}")
    entries = []
    for ln in entry_lines:
        word_part, _, mat_part = ln.partition("|")
        idx = tuple(gs.index(n) for n in word_part.split())
        u = Unitary2._from_exact_matrix(_matrix_from_fields(mat_part.split()))
        entries.append(GateWord(idx, u, gs))
    return EpsilonNet(gs, tuple(entries), eps0, k_reps, max_len, coverage)
