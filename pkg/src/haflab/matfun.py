"""Exact matrix functions on small complex matrices.

Two independent hafnian algorithms (pairing enumeration and a bitmask
subset recursion) cross-check each other; the permanent (Ryser, Gray-code
updates) cross-checks the cycle-weighted permutation sum ``alpha_det``.
All arithmetic is complex double precision.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from statistics import median

import numpy as np

from .errors import CapacityError, DimensionError, HaflabError


@dataclass
class Limits:
    """Size caps for the exponential algorithms (overridable per call)."""

    hafnian_enum: int = 16
    hafnian_dp: int = 24
    permanent: int = 20
    alpha_det: int = 10


#: Module-wide default caps; the benchmark harness may raise them.
LIMITS = Limits()


def _as_square(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_even(dim: int) -> None:
    if dim % 2 != 0:
        raise DimensionError(f"hafnian needs an even dimension, got {dim}")


def _check_cap(dim: int, cap: int, what: str) -> None:
    if dim > cap:
        raise CapacityError(f"{what}: dimension {dim} exceeds limit {cap}")


def check_symmetric(matrix, tol: float = 0.0) -> np.ndarray:
    """Validate (and return) a square complex matrix with a[i,j] == a[j,i]."""
    a = _as_square(matrix)
    if not np.all(np.abs(a - a.T) <= tol):
        raise DimensionError("matrix is not symmetric")
    return a


def _pair_sum(c: np.ndarray, remaining: tuple) -> complex:
    # Sum over perfect pairings of `remaining`: always pair off the first
    # index, recurse on the rest.  Summation order is fixed (partner index
    # ascending) so results are bitwise reproducible.
    if not remaining:
        return 1.0 + 0.0j
    i = remaining[0]
    rest = remaining[1:]
    acc = 0.0 + 0.0j
    for t in range(len(rest)):
        acc += c[i, rest[t]] * _pair_sum(c, rest[:t] + rest[t + 1 :])
    return acc


def hafnian_enum(matrix, *, max_dim: int | None = None, workers: int | None = None) -> complex:
    """Hafnian by direct enumeration of all (2n-1)!! perfect pairings.

    Never reads diagonal entries.  ``workers`` optionally splits the
    top-level pairing branch; the reduction stays in index order, so the
    result is identical for any worker count.
    """
    c = _as_square(matrix)
    dim = c.shape[0]
    _check_even(dim)
    _check_cap(dim, max_dim if max_dim is not None else LIMITS.hafnian_enum, "hafnian_enum")
    if dim == 0:
        return 1.0 + 0.0j
    rest = tuple(range(1, dim))
    branches = [(c[0, rest[t]], rest[:t] + rest[t + 1 :]) for t in range(len(rest))]
    if workers is None or workers <= 1:
        partials = [w * _pair_sum(c, sub) for w, sub in branches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda b: b[0] * _pair_sum(c, b[1]), branches))
    total = 0.0 + 0.0j
    for p in partials:
        total += p
    return total


def hafnian_dp(matrix, *, max_dim: int | None = None) -> complex:
    """Hafnian by memoized recursion over index subsets (bitmask keyed).

    haf(S) = sum over j in S of c[min(S), j] * haf(S minus {min(S), j}),
    haf(empty) = 1.  Memory grows with the number of reachable subsets,
    bounded by 2^dim and capped by the configured limit.
    """
    c = _as_square(matrix)
    dim = c.shape[0]
    _check_even(dim)
    _check_cap(dim, max_dim if max_dim is not None else LIMITS.hafnian_dp, "hafnian_dp")
    if dim == 0:
        return 1.0 + 0.0j
    memo: dict[int, complex] = {0: 1.0 + 0.0j}

    def rec(mask: int) -> complex:
        hit = memo.get(mask)
        if hit is not None:
            return hit
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        acc = 0.0 + 0.0j
        sweep = rest
        while sweep:
            low = sweep & -sweep
            j = low.bit_length() - 1
            acc += c[i, j] * rec(rest ^ low)
            sweep ^= low
        memo[mask] = acc
        return acc

    return rec((1 << dim) - 1)


def permanent(matrix, *, max_dim: int | None = None) -> complex:
    """Permanent via Ryser's inclusion-exclusion with Gray-code column updates."""
    b = _as_square(matrix)
    n = b.shape[0]
    _check_cap(n, max_dim if max_dim is not None else LIMITS.permanent, "permanent")
    if n == 0:
        return 1.0 + 0.0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray = 0
    popcount = 0
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        bit = gray ^ new_gray
        j = bit.bit_length() - 1
        if new_gray & bit:
            row_sums += b[:, j]
            popcount += 1
        else:
            row_sums -= b[:, j]
            popcount -= 1
        gray = new_gray
        term = np.prod(row_sums)
        total += term if (popcount % 2 == 0) else -term
    return total if n % 2 == 0 else -total


def _cycle_count(perm: tuple) -> int:
    n = len(perm)
    seen = [False] * n
    cycles = 0
    for start in range(n):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def alpha_det(matrix, alpha: float, *, max_dim: int | None = None) -> complex:
    """Cycle-weighted permutation sum: sum over permutations of
    alpha^(n - #cycles) times the product of matched entries.

    alpha=1 gives the permanent, alpha=-1 the determinant.
    """
    b = _as_square(matrix)
    n = b.shape[0]
    _check_cap(n, max_dim if max_dim is not None else LIMITS.alpha_det, "alpha_det")
    if n == 0:
        return 1.0 + 0.0j
    rows = np.arange(n)
    total = 0.0 + 0.0j
    for perm in permutations(range(n)):
        weight = alpha ** (n - _cycle_count(perm))
        total += weight * np.prod(b[rows, perm])
    return total


def determinant(matrix) -> complex:
    """Determinant (LU, via numpy); exposed for the CLI's cross-checks."""
    return complex(np.linalg.det(_as_square(matrix)))


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    size: int
    repetitions: int
    median_seconds: float


def random_symmetric(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random complex matrix with a[i,j] == a[j,i] exactly."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    iu = np.triu_indices(dim, 1)
    a[(iu[1], iu[0])] = a[iu]
    return a


def bench_hafnian(sizes, repetitions: int = 3, *, seed: int = 0,
                  max_dim: int | None = None) -> list[BenchRow]:
    """Median wall-clock time of both hafnian algorithms per size.

    Sizes must be even and within each algorithm's limit (or ``max_dim``).
    """
    rows: list[BenchRow] = []
    rng = np.random.default_rng(seed)
    for size in sizes:
        c = random_symmetric(int(size), rng)
        for name, fn, cap in (
            ("enum", hafnian_enum, LIMITS.hafnian_enum),
            ("dp", hafnian_dp, LIMITS.hafnian_dp),
        ):
            cap = max_dim if max_dim is not None else cap
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                fn(c, max_dim=cap)
                times.append(time.perf_counter() - t0)
            rows.append(BenchRow(name, int(size), repetitions, median(times)))
    return rows


# ---------------------------------------------------------------------------
# Plain-text matrix format: first line "dim", then rows of "re,im" pairs.
# ---------------------------------------------------------------------------


def write_matrix_text(path, matrix) -> None:
    a = _as_square(matrix)
    lines = [str(a.shape[0])]
    for row in a:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_text(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        raw = [line.strip() for line in fh if line.strip()]
    if not raw:
        raise HaflabError(f"{path}: empty matrix file")
    try:
        dim = int(raw[0])
    except ValueError as exc:
        raise HaflabError(f"{path}: first line must be the dimension") from exc
    if len(raw) != dim + 1:
        raise DimensionError(f"{path}: expected {dim} rows, found {len(raw) - 1}")
    out = np.zeros((dim, dim), dtype=complex)
    for i, line in enumerate(raw[1:]):
        cells = line.split()
        if len(cells) != dim:
            raise DimensionError(f"{path}: row {i} has {len(cells)} entries, expected {dim}")
        for j, cell in enumerate(cells):
            try:
                re, im = cell.split(",")
                out[i, j] = complex(float(re), float(im))
            except ValueError as exc:
                raise HaflabError(f"{path}: bad entry {cell!r} at row {i}") from exc
    return out
