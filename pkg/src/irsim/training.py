"""Basis training reflection matrix design for per-group channel estimation.

Constructs the candidate training matrices used during the pilot portion of
each block: quantized DFT matrices (for resolutions of two bits and up),
truncated Hadamard matrices (for one-bit phase shifters), and the naive
benchmark matrix.  Also evaluates the normalized training MSE objective
``tr((T^H T)^-1)`` and provides a brute-force search over all feasible
matrices at tiny sizes, used as an optimality oracle in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .phases import PhaseAlphabet

#: Relative singular-value threshold below which a matrix counts as rank
#: deficient.
RANK_RTOL = 1e-9

#: Search bound for the smallest constructible Hadamard order >= M.
ORDER_SEARCH_FACTOR = 4


class UnsupportedOrderError(ValueError):
    """No Hadamard matrix of the requested order can be constructed.

    Carries ``smallest_supported``, the smallest constructible order at or
    above the request.
    """

    def __init__(self, order: int, smallest_supported: int):
        self.order = order
        self.smallest_supported = smallest_supported
        super().__init__(
            f"no Hadamard construction for order {order}; "
            f"smallest supported order >= {order} is {smallest_supported}"
        )


class SizeLimitError(ValueError):
    """Exhaustive search would exceed the configured size guard."""


@dataclass(frozen=True)
class ReflectionMatrix:
    """Matrix of unit-modulus entries with phases from a shared alphabet."""

    alphabet: PhaseAlphabet
    indices: np.ndarray  # integer phase indices, shape (rows, cols)

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 2:
            raise ValueError("indices must be a 2-D array")
        object.__setattr__(self, "indices", idx.astype(np.int64) % self.alphabet.levels)

    @property
    def rows(self) -> int:
        return self.indices.shape[0]

    @property
    def cols(self) -> int:
        return self.indices.shape[1]

    @property
    def values(self) -> np.ndarray:
        """Complex matrix with every entry of modulus one."""
        return self.alphabet.units[self.indices]


@dataclass(frozen=True)
class TrainingDesignReport:
    """A designed training matrix together with its rank and MSE summary.

    ``normalized_mse`` is the trace term of the estimation MSE (the actual
    MSE is this value times noise power over pilot power); it is NaN when the
    matrix is rank deficient, in which case least-squares estimation is
    infeasible and the condition is surfaced rather than silently repaired.
    """

    matrix: ReflectionMatrix
    full_rank: bool
    normalized_mse: float


def matrix_values(matrix) -> np.ndarray:
    """Complex ndarray view of a ReflectionMatrix or plain array."""
    if isinstance(matrix, ReflectionMatrix):
        return matrix.values
    return np.asarray(matrix)


def dft_matrix(m: int) -> np.ndarray:
    """The m x m DFT matrix with entries exp(-2j*pi*r*c/m); D^H D = m*I."""
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    grid = np.multiply.outer(np.arange(m), np.arange(m))
    return np.exp(-2j * np.pi * grid / m)


def quantized_dft(m: int, alphabet: PhaseAlphabet) -> ReflectionMatrix:
    """Entrywise nearest-alphabet quantization of the m x m DFT matrix.

    Quantization may destroy invertibility (notably for one-bit alphabets);
    singularity is a reported property of the result, not an error here.
    """
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    grid = np.multiply.outer(np.arange(m), np.arange(m))
    # Target phase in alphabet steps is -K*r*c/m exactly; feeding the ratio
    # directly keeps half-step ties exact instead of round-tripping radians.
    steps = -(alphabet.levels * grid) / m
    return ReflectionMatrix(alphabet, alphabet.index_from_steps(steps))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _prime_power(n: int):
    """Return (p, k) with n == p**k and p prime, else None."""
    if n < 2:
        return None
    p = n
    for f in range(2, int(n**0.5) + 1):
        if n % f == 0:
            p = f
            break
    if not _is_prime(p):
        return None
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return (p, k) if n == 1 else None


def _poly_mod(num, den, p):
    """Remainder of polynomial division over Z_p (coefficients low to high)."""
    num = list(num)
    dd = len(den) - 1
    inv_lead = pow(den[-1], -1, p)
    for i in range(len(num) - 1, dd - 1, -1):
        coef = num[i] * inv_lead % p
        if coef:
            for j in range(dd + 1):
                num[i - dd + j] = (num[i - dd + j] - coef * den[j]) % p
    return num[:dd]


def _irreducible_poly(p: int, k: int):
    """Monic irreducible polynomial of degree k over Z_p (brute force)."""
    def poly_from_index(i, deg):
        return [(i // p**j) % p for j in range(deg)]

    lower = []
    for deg in range(1, k // 2 + 1):
        for i in range(p**deg):
            lower.append(poly_from_index(i, deg) + [1])
    for i in range(p**k):
        cand = poly_from_index(i, k) + [1]
        if all(any(_poly_mod(cand, d, p)) for d in lower):
            return cand
    raise RuntimeError(f"no irreducible polynomial of degree {k} over GF({p})")


@lru_cache(maxsize=None)
def _quadratic_character(q: int) -> np.ndarray:
    """chi(x) over GF(q) as a vector indexed by element id.

    Elements of GF(p^k) are indexed by their coefficient vectors read as base-p
    digits; chi is +1 on nonzero squares, -1 on nonsquares, 0 at zero.
    """
    p, k = _prime_power(q)
    if k == 1:
        squares = {(x * x) % p for x in range(1, p)}
        return np.array([0] + [1 if x in squares else -1 for x in range(1, p)])
    modulus = _irreducible_poly(p, k)

    def coeffs(i):
        return [(i // p**j) % p for j in range(k)]

    def index(c):
        return sum(int(ci) * p**j for j, ci in enumerate(c))

    squares = set()
    for i in range(1, q):
        a = coeffs(i)
        prod = [0] * (2 * k - 1)
        for x, ax in enumerate(a):
            for y, ay in enumerate(a):
                prod[x + y] = (prod[x + y] + ax * ay) % p
        squares.add(index(_poly_mod(prod, modulus, p)))
    return np.array([0] + [1 if i in squares else -1 for i in range(1, q)])


def _gf_difference_table(q: int) -> np.ndarray:
    """Table of element ids for a_i - a_j over GF(q)."""
    p, k = _prime_power(q)
    digits = np.array([[(i // p**j) % p for j in range(k)] for i in range(q)])
    diff = (digits[:, None, :] - digits[None, :, :]) % p
    return (diff * (p ** np.arange(k))).sum(axis=2)


def _jacobsthal(q: int) -> np.ndarray:
    chi = _quadratic_character(q)
    return chi[_gf_difference_table(q)]


@lru_cache(maxsize=None)
def _hadamard_constructible(order: int) -> bool:
    if order in (1, 2):
        return True
    if order < 1 or order % 4 != 0:
        return False
    if _hadamard_constructible(order // 2):
        return True
    pp = _prime_power(order - 1)
    if pp is not None and (order - 1) % 4 == 3:
        return True
    if order % 8 == 4:
        pp = _prime_power(order // 2 - 1)
        if pp is not None and (order // 2 - 1) % 4 == 1:
            return True
    # Kronecker product of two smaller constructible orders.
    d = 4
    while d * d <= order:
        if order % d == 0 and _hadamard_constructible(d) and _hadamard_constructible(order // d):
            return True
        d += 4
    return False


def smallest_hadamard_order(order: int, search_factor: int = ORDER_SEARCH_FACTOR) -> int:
    """Smallest constructible Hadamard order >= order (bounded search)."""
    if order < 1:
        raise ValueError(f"matrix order must be >= 1, got {order}")
    for ell in range(order, search_factor * order + 1):
        if _hadamard_constructible(ell):
            return ell
    raise UnsupportedOrderError(order, -1)


def hadamard_matrix(order: int) -> np.ndarray:
    """A +/-1 Hadamard matrix of the given order, H @ H.T == order * I.

    Construction: Sylvester doubling, Paley type I (orders q+1 for prime
    powers q = 3 mod 4), Paley type II (orders 2(q+1) for prime powers
    q = 1 mod 4), and Kronecker products of smaller constructible orders.
    """
    if order < 1:
        raise ValueError(f"matrix order must be >= 1, got {order}")
    if not _hadamard_constructible(order):
        raise UnsupportedOrderError(order, smallest_hadamard_order(order))
    if order == 1:
        return np.array([[1]], dtype=np.int64)
    if order == 2:
        return np.array([[1, 1], [1, -1]], dtype=np.int64)
    if _hadamard_constructible(order // 2):
        return np.kron(hadamard_matrix(2), hadamard_matrix(order // 2))
    q = order - 1
    if _prime_power(q) is not None and q % 4 == 3:
        jac = _jacobsthal(q)
        s = np.zeros((order, order), dtype=np.int64)
        s[0, 1:] = 1
        s[1:, 0] = -1
        s[1:, 1:] = jac
        return np.eye(order, dtype=np.int64) + s
    q = order // 2 - 1
    if _prime_power(q) is not None and q % 4 == 1:
        jac = _jacobsthal(q)
        s = np.zeros((q + 1, q + 1), dtype=np.int64)
        s[0, 1:] = 1
        s[1:, 0] = 1
        s[1:, 1:] = jac
        cell = np.array([[1, 1], [1, -1]], dtype=np.int64)
        diag_cell = np.array([[1, -1], [-1, -1]], dtype=np.int64)
        return np.kron(s, cell) + np.kron(np.eye(q + 1, dtype=np.int64), diag_cell)
    d = 4
    while d * d <= order:
        if order % d == 0 and _hadamard_constructible(d) and _hadamard_constructible(order // d):
            return np.kron(hadamard_matrix(d), hadamard_matrix(order // d))
        d += 4
    raise UnsupportedOrderError(order, smallest_hadamard_order(order))


_SIGN_ALPHABET = PhaseAlphabet(bits=1)


def _signs_to_reflection(signs: np.ndarray) -> ReflectionMatrix:
    return ReflectionMatrix(_SIGN_ALPHABET, ((1 - signs) // 2).astype(np.int64))


def truncated_hadamard(m: int) -> ReflectionMatrix:
    """Leading m x m block of the smallest constructible Hadamard matrix >= m."""
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    ell = smallest_hadamard_order(m)
    return _signs_to_reflection(hadamard_matrix(ell)[:m, :m])


def naive_matrix(m: int) -> ReflectionMatrix:
    """Benchmark matrix with -1 on the diagonal and +1 elsewhere.

    Feasible at every resolution and pilot length, but increasingly
    ill-conditioned as m grows and singular at m = 2.
    """
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    signs = np.ones((m, m), dtype=np.int64) - 2 * np.eye(m, dtype=np.int64)
    return _signs_to_reflection(signs)


def _singular_values(matrix) -> np.ndarray:
    return np.linalg.svd(matrix_values(matrix), compute_uv=False)


def is_full_rank(matrix) -> bool:
    """Full-rank test: smallest singular value > RANK_RTOL * largest."""
    values = matrix_values(matrix)
    if values.shape[0] != values.shape[1]:
        return False
    s = _singular_values(values)
    return bool(s[-1] > RANK_RTOL * s[0])


def normalized_training_mse(matrix) -> float:
    """tr((T^H T)^-1) for a square full-rank training matrix.

    Multiplying by noise power over pilot power gives the per-block MSE of
    the least-squares per-group channel estimate.  Equals 1 exactly when the
    matrix is orthogonal (T^H T = m*I), which is the continuous-phase lower
    bound; always >= 1 for unit-modulus entries.
    """
    values = matrix_values(matrix)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("training matrix must be square")
    s = _singular_values(values)
    if s[-1] <= RANK_RTOL * s[0]:
        raise np.linalg.LinAlgError("training matrix is rank deficient")
    return float(np.sum(1.0 / s**2))


def _report_for(matrix: ReflectionMatrix) -> TrainingDesignReport:
    full_rank = is_full_rank(matrix)
    mse = normalized_training_mse(matrix) if full_rank else float("nan")
    return TrainingDesignReport(matrix=matrix, full_rank=full_rank, normalized_mse=mse)


def design_basis_matrix(m: int, alphabet: PhaseAlphabet) -> TrainingDesignReport:
    """DFT/Hadamard-based training matrix design for the given resolution.

    Quantized DFT for alphabets of two bits and up (empirically full rank);
    truncated Hadamard for the one-bit alphabet, where DFT quantization is
    mostly singular.
    """
    if alphabet.bits >= 2:
        return _report_for(quantized_dft(m, alphabet))
    return _report_for(truncated_hadamard(m))


#: Guard on bits * m**2 for the exhaustive basis search.
EXHAUSTIVE_BITS_LIMIT = 16

_CHUNK = 8192


def exhaustive_optimal_basis(m: int, alphabet: PhaseAlphabet) -> TrainingDesignReport:
    """Minimum-MSE training matrix by enumeration of all K^(m*m) candidates.

    Only run at toy sizes (bits * m^2 <= 16); ties resolve to the first
    matrix in lexicographic phase-index order so results are reproducible.
    """
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    if alphabet.bits * m * m > EXHAUSTIVE_BITS_LIMIT:
        raise SizeLimitError(
            f"exhaustive search needs bits*m^2 <= {EXHAUSTIVE_BITS_LIMIT}, "
            f"got {alphabet.bits * m * m}"
        )
    k = alphabet.levels
    units = alphabet.units
    total = k ** (m * m)
    best_mse = np.inf
    best_idx = None
    for start in range(0, total, _CHUNK):
        count = min(_CHUNK, total - start)
        flat = np.array(
            np.unravel_index(np.arange(start, start + count), (k,) * (m * m))
        ).T.reshape(count, m, m)
        cand = units[flat]
        s = np.linalg.svd(cand, compute_uv=False)
        ok = s[:, -1] > RANK_RTOL * s[:, 0]
        s_safe = np.where(ok[:, None], s, 1.0)
        mse = np.where(ok, np.sum(1.0 / s_safe**2, axis=1), np.inf)
        pos = int(np.argmin(mse))
        if mse[pos] < best_mse:
            best_mse = float(mse[pos])
            best_idx = flat[pos].copy()
    if best_idx is None or not np.isfinite(best_mse):
        raise np.linalg.LinAlgError("no full-rank candidate found")
    matrix = ReflectionMatrix(alphabet, best_idx)
    return TrainingDesignReport(matrix=matrix, full_rank=True, normalized_mse=best_mse)
