"""Addresses and the two generating automorphisms of the Bethe lattice.

The root is the empty tuple.  A level-``l`` address is ``(a1, ..., al)`` with
``a1`` in ``1..k`` and later digits in ``1..k-1``; the parent of an address is
obtained by dropping its last digit.

``tau1`` is a translation along the ``(k) -> () -> (1) -> (1, 1) -> ...`` axis,
``tau2`` rotates every digit cyclically inside its range.
"""

from __future__ import annotations

import math
from collections import deque
from functools import lru_cache

Address = tuple


class SearchBoundError(RuntimeError):
    """Transitive-coordinate search exhausted its level bound."""


def validate(addr: Address, k: int) -> Address:
    addr = tuple(int(a) for a in addr)
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    if addr and not 1 <= addr[0] <= k:
        raise ValueError(f"first digit {addr[0]} outside 1..{k}")
    for a in addr[1:]:
        if not 1 <= a <= k - 1:
            raise ValueError(f"digit {a} outside 1..{k - 1}")
    return addr


def tau1(addr: Address, k: int) -> Address:
    addr = validate(addr, k)
    if not addr:
        return (1,)
    if addr[0] == k:
        if len(addr) == 1:
            return ()
        return (addr[1] + 1,) + addr[2:]
    # a1 <= k-1: push one level down behind digit 1 (also at level 1)
    return (1,) + addr


def tau1_inv(addr: Address, k: int) -> Address:
    addr = validate(addr, k)
    if not addr:
        return (k,)
    if addr[0] == 1:
        return addr[1:]
    return (k, addr[0] - 1) + addr[1:]


def tau2(addr: Address, k: int) -> Address:
    addr = validate(addr, k)
    if not addr:
        return ()
    return (addr[0] % k + 1,) + tuple(a % (k - 1) + 1 for a in addr[1:])


def tau2_inv(addr: Address, k: int) -> Address:
    addr = validate(addr, k)
    if not addr:
        return ()
    return ((addr[0] - 2) % k + 1,) + tuple((a - 2) % (k - 1) + 1 for a in addr[1:])


def tau2_period(k: int) -> int:
    return math.lcm(k, k - 1)


def apply_word(word, addr: Address, k: int) -> Address:
    """Apply ``tau2**d2 tau1**d1`` for each ``(d1, d2)`` in ``word``, first pair first."""
    for d1, d2 in word:
        step = tau1 if d1 >= 0 else tau1_inv
        for _ in range(abs(d1)):
            addr = step(addr, k)
        step = tau2 if d2 >= 0 else tau2_inv
        for _ in range(abs(d2)):
            addr = step(addr, k)
    return addr


def address_index(addr: Address, k: int) -> int:
    """Position of ``addr`` in breadth-first order (root 0, children by digit)."""
    l = len(addr)
    if l == 0:
        return 0
    before = 1 + k * ((k - 1) ** (l - 1) - 1) // (k - 2)
    offset = (addr[0] - 1) * (k - 1) ** (l - 1)
    for j in range(1, l):
        offset += (addr[j] - 1) * (k - 1) ** (l - 1 - j)
    return before + offset


def addresses(k: int, max_level: int):
    """All addresses up to ``max_level`` in breadth-first order."""
    level = [()]
    yield ()
    for l in range(1, max_level + 1):
        nxt = []
        for a in level:
            digits = range(1, k + 1) if l == 1 else range(1, k)
            nxt.extend(a + (j,) for j in digits)
        yield from nxt
        level = nxt


def _compress(gens) -> list[tuple[int, int]]:
    word: list[list[int]] = []
    for g in gens:
        which, sign = g
        if which == 1:
            if word and word[-1][1] == 0 and (word[-1][0] == 0 or (word[-1][0] > 0) == (sign > 0)):
                word[-1][0] += sign
            else:
                word.append([sign, 0])
        else:
            if not word:
                word.append([0, 0])
            word[-1][1] += sign
    return [(d1, d2) for d1, d2 in word]


def _single_pair(addr: Address, k: int):
    # tau1^d1(root) = (1,...,1); tau2 then rotates all digits together
    l = len(addr)
    base = (1,) * l
    for d2 in range(tau2_period(k)):
        if apply_word([(0, d2)], base, k) == addr:
            return [(l, d2)]
    return None


@lru_cache(maxsize=None)
def _level_words(k: int, level: int, slack: int) -> dict:
    bound = level + slack
    parent: dict = {(): None}
    queue = deque([()])
    moves = [((1, 1), tau1), ((1, -1), tau1_inv), ((2, 1), tau2), ((2, -1), tau2_inv)]
    while queue:
        a = queue.popleft()
        for gen, fn in moves:
            b = fn(a, k)
            if len(b) <= bound and b not in parent:
                parent[b] = (a, gen)
                queue.append(b)
    out = {}
    for addr in addresses(k, level):
        if len(addr) != level:
            continue
        pair = _single_pair(addr, k)
        if pair is not None:
            out[addr] = pair
            continue
        if addr not in parent:
            raise SearchBoundError(f"address {addr} not reached within level {bound}")
        gens = []
        cur = addr
        while parent[cur] is not None:
            cur, gen = parent[cur]
            gens.append(gen)
        out[addr] = _compress(reversed(gens))
    return out


def transitive_words(k: int, max_level: int, slack: int = 2) -> dict:
    """Words ``[(d1, d2), ...]`` carrying the root to every address of level <= ``max_level``.

    A single pair ``(d1, d2)`` is used whenever ``tau2**d2 tau1**d1`` reaches the
    address; otherwise a shortest generator word is found by breadth-first search
    over ``tau1``, ``tau2`` and their inverses, restricted to levels
    ``<= level + slack``.  The word of an address depends only on the address,
    not on ``max_level``.
    """
    out = {}
    for level in range(max_level + 1):
        out.update(_level_words(k, level, slack))
    return out


def transitive_coordinates(addr: Address, k: int, slack: int = 2) -> list[tuple[int, int]]:
    """Word ``[(d1, d2), ...]`` with ``apply_word(word, (), k) == addr``.

    Most addresses need more than one ``(d1, d2)`` pair: ``tau2**d2 tau1**d1``
    applied to the root only reaches addresses whose digits rotate in lockstep.
    """
    addr = validate(addr, k)
    return transitive_words(k, len(addr), slack)[addr]
