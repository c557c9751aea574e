"""Finite Kripke models for the belief logic, used as a brute-force test oracle.

Accessibility is an equivalence relation given as a partition (S5).  Each
world carries a valuation of a finite atom universe and a test history;
``is_empty`` and ``StatB`` are evaluated from the history, never from the
valuation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from bhlcheck.logic import (
    Atom,
    Conj,
    Disj,
    Know,
    Not,
    Possible,
    StatB,
    TestHistory,
)
from bhlcheck.specs import believes

MAX_WORLDS = 4


class OracleError(Exception):
    pass


class UnknownAtom(OracleError):
    pass


class LimitExceeded(OracleError):
    pass


@dataclass(frozen=True)
class KripkeModel:
    atoms: tuple[Atom, ...]
    partition: tuple[int, ...]
    valuation: tuple[frozenset, ...]
    histories: tuple[TestHistory, ...]

    def __post_init__(self):
        n = len(self.partition)
        if not (len(self.valuation) == len(self.histories) == n):
            raise OracleError("partition, valuation and histories disagree on the number of worlds")

    @property
    def worlds(self) -> range:
        return range(len(self.partition))

    def accessible(self, w: int) -> list[int]:
        return [v for v in self.worlds if self.partition[v] == self.partition[w]]


def satisfies(m: KripkeModel, w: int, f) -> bool:
    if isinstance(f, Atom):
        if f.pred == "is_empty":
            return len(m.histories[w]) == 0
        if f not in m.atoms:
            raise UnknownAtom(repr(f))
        return f in m.valuation[w]
    if isinstance(f, Not):
        return not satisfies(m, w, f.body)
    if isinstance(f, Conj):
        return all(satisfies(m, w, p) for p in f.parts)
    if isinstance(f, Disj):
        return any(satisfies(m, w, p) for p in f.parts)
    if isinstance(f, Know):
        return all(satisfies(m, v, f.body) for v in m.accessible(w))
    if isinstance(f, Possible):
        return any(satisfies(m, v, f.body) for v in m.accessible(w))
    if isinstance(f, StatB):
        return believes(m.histories[w], f.record, f.hyp)
    raise OracleError(f"not a formula: {f!r}")


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length ``n``: one per partition of n worlds."""

    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for c in range(top + 2):
            yield from grow(prefix + [c], max(top, c))

    if n == 0:
        yield ()
        return
    yield from grow([0], 0)


def enumerate_models(
    atoms: Sequence[Atom],
    max_worlds: int,
    history_pool: Sequence[TestHistory] = (),
    *,
    min_worlds: int = 1,
) -> Iterator[KripkeModel]:
    if max_worlds > MAX_WORLDS:
        raise LimitExceeded(f"at most {MAX_WORLDS} worlds, asked for {max_worlds}")
    atoms = tuple(atoms)
    pool = tuple(history_pool) or (TestHistory(),)
    valuations = [
        frozenset(a for a, bit in zip(atoms, bits) if bit)
        for bits in itertools.product((False, True), repeat=len(atoms))
    ]
    for n in range(min_worlds, max_worlds + 1):
        for part in set_partitions(n):
            for val in itertools.product(valuations, repeat=n):
                for hists in itertools.product(pool, repeat=n):
                    yield KripkeModel(atoms, part, tuple(val), tuple(hists))


class TruthTable:
    """Truth values of formulas over every (model, world) pair at once.

    Equivalent to calling :func:`satisfies` pair by pair, but vectorized with
    numpy and memoized per subformula, which makes exhaustive checks over
    thousands of models cheap.
    """

    def __init__(self, models: Sequence[KripkeModel]):
        self.models = list(models)
        cls, hist, owner, world = [], [], [], []
        self.pool: list[TestHistory] = []
        hist_index: dict[TestHistory, int] = {}
        offset = 0
        for mi, m in enumerate(self.models):
            for w in m.worlds:
                cls.append(offset + m.partition[w])
                h = m.histories[w]
                if h not in hist_index:
                    hist_index[h] = len(self.pool)
                    self.pool.append(h)
                hist.append(hist_index[h])
                owner.append(mi)
                world.append(w)
            offset += max(m.partition) + 1 if m.partition else 0
        self.cls = np.array(cls, dtype=np.int64)
        self.hist = np.array(hist, dtype=np.int64)
        self.owner = np.array(owner, dtype=np.int64)
        self.world = np.array(world, dtype=np.int64)
        self.n_classes = offset
        self._cache: dict = {}

    def __len__(self) -> int:
        return len(self.cls)

    def eval(self, f) -> np.ndarray:
        hit = self._cache.get(f)
        if hit is not None:
            return hit
        out = self._eval(f)
        out.flags.writeable = False
        self._cache[f] = out
        return out

    def _eval(self, f) -> np.ndarray:
        if isinstance(f, Atom):
            if f.pred == "is_empty":
                per_hist = np.array([len(h) == 0 for h in self.pool])
                return per_hist[self.hist]
            vals = []
            for m in self.models:
                if f not in m.atoms:
                    raise UnknownAtom(repr(f))
                vals.extend(f in v for v in m.valuation)
            return np.array(vals, dtype=bool)
        if isinstance(f, Not):
            return ~self.eval(f.body)
        if isinstance(f, Conj):
            return np.logical_and.reduce([self.eval(p) for p in f.parts])
        if isinstance(f, Disj):
            return np.logical_or.reduce([self.eval(p) for p in f.parts])
        if isinstance(f, Know):
            bad = np.bincount(self.cls, weights=~self.eval(f.body), minlength=self.n_classes)
            return (bad == 0)[self.cls]
        if isinstance(f, Possible):
            good = np.bincount(self.cls, weights=self.eval(f.body), minlength=self.n_classes)
            return (good > 0)[self.cls]
        if isinstance(f, StatB):
            per_hist = np.array([believes(h, f.record, f.hyp) for h in self.pool])
            return per_hist[self.hist]
        raise OracleError(f"not a formula: {f!r}")
