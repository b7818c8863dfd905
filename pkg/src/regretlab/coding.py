"""Code-length functions, Kraft admissibility and optimal codes.

Actions in the coding picture are code-length functions; the induced
value function -min_l sum l(a) p_a is piecewise linear, hence never a
Bregman divergence.  Enumeration of non-dominated admissible integer
length vectors is exact and guarded by alphabet size.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import regret_core
from .errors import DomainError, TooLarge

__all__ = [
    "CodeLengthFunction",
    "IntegerCodeLengthFunction",
    "kraft_sum",
    "shannon_lengths",
    "huffman_lengths",
    "expected_length",
    "nondominated_profiles",
    "integer_value_function",
    "shannon_bounds_check",
    "block_code_lengths",
    "canonical_prefix_code",
    "coding_value_function",
    "entropy_base",
    "MAX_ALPHABET",
]

MAX_ALPHABET = 12


@dataclass(frozen=True)
class CodeLengthFunction:
    """Per-symbol positive real lengths for a beta-ary output alphabet."""

    lengths: tuple[float, ...]
    beta: int = 2

    def __post_init__(self):
        if self.beta < 2:
            raise DomainError("output alphabet size must be at least 2")
        if any(l <= 0 for l in self.lengths):
            raise DomainError("lengths must be positive")

    @property
    def kraft(self) -> float:
        return kraft_sum(self.lengths, self.beta)

    @property
    def admissible(self) -> bool:
        return self.kraft <= 1.0 + 1e-12


@dataclass(frozen=True)
class IntegerCodeLengthFunction(CodeLengthFunction):
    def __post_init__(self):
        super().__post_init__()
        if any(int(l) != l for l in self.lengths):
            raise DomainError("lengths must be integers")
        object.__setattr__(self, "lengths", tuple(int(l) for l in self.lengths))


def kraft_sum(lengths, beta: int = 2) -> float:
    """sum beta^(-l) over the symbols; <= 1 means admissible."""
    return float(sum(float(beta) ** (-l) for l in lengths))


def shannon_lengths(probs, beta: int = 2) -> CodeLengthFunction:
    """Ideal lengths -log_beta p; Kraft sum is exactly one."""
    p = np.asarray(probs, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("ideal lengths need full support")
    return CodeLengthFunction(tuple(-np.log(p) / math.log(beta)), beta)


def expected_length(lengths, probs) -> float:
    l = np.asarray(lengths, dtype=float)
    p = np.asarray(probs, dtype=float)
    if l.shape != p.shape:
        raise DomainError("lengths and probabilities must align")
    return float(l @ p)


def huffman_lengths(probs) -> IntegerCodeLengthFunction:
    """Binary Huffman code lengths; zero-probability symbols keep a
    codeword so the code covers the whole alphabet."""
    p = list(np.asarray(probs, dtype=float))
    n = len(p)
    if n == 0:
        raise DomainError("alphabet must be non-empty")
    if n == 1:
        return IntegerCodeLengthFunction((1,), 2)
    heap = [(w, i, (i,)) for i, w in enumerate(p)]
    heapq.heapify(heap)
    depths = [0] * n
    counter = n
    while len(heap) > 1:
        w1, _, g1 = heapq.heappop(heap)
        w2, _, g2 = heapq.heappop(heap)
        for i in g1 + g2:
            depths[i] += 1
        heapq.heappush(heap, (w1 + w2, counter, g1 + g2))
        counter += 1
    return IntegerCodeLengthFunction(tuple(depths), 2)


@lru_cache(maxsize=64)
def nondominated_profiles(n: int, beta: int = 2) -> tuple[tuple[int, ...], ...]:
    """Sorted (non-decreasing) admissible integer length profiles of
    size n with no admissible profile componentwise below them.

    Every non-dominated length vector is a permutation of exactly one
    profile, and lengths never exceed max(1, n - 1).
    """
    if n > MAX_ALPHABET:
        raise TooLarge(f"enumeration guarded at alphabet size {MAX_ALPHABET}")
    lmax = max(1, n - 1)
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], ksum: float, lo: int):
        k = len(prefix)
        if k == n:
            if ksum <= 1.0 + 1e-12:
                out.append(tuple(prefix))
            return
        remaining = n - k
        for l in range(lo, lmax + 1):
            # even with every later length at lmax the sum must stay <= 1
            lower = ksum + float(beta) ** (-l) + (remaining - 1) * float(beta) ** (-lmax)
            if lower > 1.0 + 1e-12:
                continue
            prefix.append(l)
            rec(prefix, ksum + float(beta) ** (-l), l)
            prefix.pop()

    rec([], 0.0, 1)
    keep = []
    for cand in out:
        dominated = any(
            other != cand and all(o <= c for o, c in zip(other, cand))
            for other in out
        )
        if not dominated:
            keep.append(cand)
    return tuple(keep)


def integer_value_function(probs, beta: int = 2):
    """-(min expected length) over all admissible non-dominated integer
    length vectors, with the achieving vector in symbol order.

    Returns (value, lengths).  The minimum assigns short lengths to
    heavy symbols, so only sorted profiles need to be scanned.
    """
    p = np.asarray(probs, dtype=float)
    n = len(p)
    order = np.argsort(-p, kind="stable")
    p_sorted = p[order]
    best_mean = math.inf
    best_profile = None
    for profile in nondominated_profiles(n, beta):
        mean = float(np.dot(profile, p_sorted))
        if mean < best_mean - 1e-15:
            best_mean = mean
            best_profile = profile
    lengths = np.empty(n, dtype=int)
    lengths[order] = best_profile
    return -best_mean, IntegerCodeLengthFunction(tuple(int(x) for x in lengths), beta)


def entropy_base(probs, beta: int = 2) -> float:
    """Entropy in units of log beta."""
    p = np.asarray(probs, dtype=float)
    pos = p[p > 0.0]
    return float(-np.sum(pos * np.log(pos)) / math.log(beta))


def shannon_bounds_check(probs, beta: int = 2):
    """(H_beta, L*, H_beta + 1) with L* the exact optimal mean length;
    the sandwich H <= L* <= H + 1 holds for every distribution."""
    h = entropy_base(probs, beta)
    value, _ = integer_value_function(probs, beta)
    lstar = -value
    return h, lstar, h + 1.0


def block_code_lengths(clf: CodeLengthFunction, n: int, n_strings: int = 512,
                       seed: int = 0, exhaustive_limit: int = 4096):
    """Integer block lengths ceil(sum_i l(a_i)) over length-n strings.

    The per-symbol deviation |l_kappa/n - mean l| is at most 1/n by
    ceiling arithmetic.  When the alphabet power is small the strings
    are enumerated exhaustively and the block-level Kraft sum is
    reported; otherwise strings are sampled.
    """
    if n < 1:
        raise DomainError("block length must be positive")
    lengths = np.asarray(clf.lengths, dtype=float)
    alphabet = len(lengths)
    total = alphabet ** n
    exhaustive = total <= exhaustive_limit
    if exhaustive:
        strings = list(itertools.product(range(alphabet), repeat=n))
    else:
        rng = np.random.default_rng(seed)
        strings = [tuple(rng.integers(0, alphabet, size=n)) for _ in range(n_strings)]
    sums = np.array([lengths[list(s)].sum() for s in strings])
    block = np.ceil(sums - 1e-12).astype(int)
    block = np.maximum(block, 1)
    deviation = float(np.max(np.abs(block / n - sums / n)))
    result = {
        "n": n,
        "exhaustive": exhaustive,
        "strings_checked": len(strings),
        "max_deviation": deviation,
        "bound": 1.0 / n,
        "admissible": clf.admissible,
    }
    if exhaustive:
        result["block_kraft"] = float(np.sum(float(clf.beta) ** (-block.astype(float))))
    return result


def canonical_prefix_code(lengths, beta: int = 2) -> list[str]:
    """Explicit prefix-free codewords for admissible integer lengths,
    as strings over the digits 0..beta-1 (existence certificate)."""
    ls = [int(l) for l in lengths]
    if kraft_sum(ls, beta) > 1.0 + 1e-12:
        raise DomainError("lengths are not Kraft admissible")
    order = sorted(range(len(ls)), key=lambda i: ls[i])
    words = [""] * len(ls)
    code = 0
    prev = None
    for idx in order:
        l = ls[idx]
        if prev is not None:
            code = (code + 1) * beta ** (l - prev)
        prev = l
        digits = []
        c = code
        for _ in range(l):
            digits.append(str(c % beta))
            c //= beta
        words[idx] = "".join(reversed(digits))
    return words


def coding_value_function(n: int, beta: int = 2, max_alphabet: int = 8):
    """The piecewise-linear value function as an explicit action set:
    one payoff vector -l per permutation of each non-dominated profile.

    Feeds the regret machinery; guarded harder than the value
    computation because permutations multiply.
    """
    if n > max_alphabet:
        raise TooLarge(f"action-set export guarded at alphabet size {max_alphabet}")
    vectors = set()
    for profile in nondominated_profiles(n, beta):
        for perm in itertools.permutations(profile):
            vectors.add(perm)
    payoffs = [[-float(l) for l in vec] for vec in sorted(vectors)]
    return regret_core.action_set_from_payoffs(payoffs)
