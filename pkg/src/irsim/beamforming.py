"""Discrete-phase passive beamforming under correlated estimation error.

The design problem in each block: pick one alphabet phase per resolved
subgroup to maximize the SINR

    p * |phi^H g_hat|^2 / (p * phi^H R phi + sigma2),

where R is the estimation-error covariance (it already carries the
noise-over-pilot-power factor, so the interference term is p * phi^H R phi).
Provided here: the three initializations (semidefinite relaxation,
replication from the previous block, channel-gain maximization), cyclic
coordinate ascent over the alphabet, a brute-force search for toy sizes, and
two upper-bound references.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import SplitEvent
from .phases import PhaseAlphabet
from .sdp import SdpProblem, SolverFailure, gaussian_randomization, solve_relaxation

#: Guard on bits * dimension for the exhaustive search.
EXHAUSTIVE_BITS_LIMIT = 20

DEFAULT_REFINEMENT_EPSILON = 1e-4
DEFAULT_RANDOMIZATION_DRAWS = 1000

_UNIT_ATOL = 1e-9


class SizeLimitError(ValueError):
    """Exhaustive search would exceed the configured size guard."""


@dataclass(frozen=True, eq=False)
class BeamformingProblem:
    """Estimated subgroup channels plus the statistics the SINR needs.

    ``error_cov`` is the group-major covariance of the estimation error (the
    output of :func:`irsim.estimation.error_covariance`).
    """

    g_hat: np.ndarray
    error_cov: np.ndarray
    p: float
    sigma2: float
    alphabet: PhaseAlphabet

    def __post_init__(self):
        g = np.asarray(self.g_hat, dtype=complex).reshape(-1)
        r = np.asarray(self.error_cov, dtype=complex)
        if r.shape != (g.size, g.size):
            raise ValueError("covariance shape does not match the channel vector")
        if self.p <= 0 or self.sigma2 < 0:
            raise ValueError("need p > 0 and sigma2 >= 0")
        object.__setattr__(self, "g_hat", g)
        object.__setattr__(self, "error_cov", (r + r.conj().T) / 2.0)

    @property
    def size(self) -> int:
        return self.g_hat.size

    def outer(self) -> np.ndarray:
        """Rank-one objective matrix g_hat g_hat^H."""
        return np.outer(self.g_hat, self.g_hat.conj())

    def scaled_interference(self) -> np.ndarray:
        """(p/sigma2) * error_cov, the matrix in the fractional SINR form."""
        if self.sigma2 == 0:
            return np.zeros_like(self.error_cov)
        return (self.p / self.sigma2) * self.error_cov


@dataclass(frozen=True, eq=False)
class BeamformingSolution:
    phi: np.ndarray
    sinr: float
    initializer: str
    sweeps: int


def _check_unit_modulus(phi, n: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.size != n:
        raise ValueError(f"beamforming vector must have length {n}, got {phi.size}")
    if not np.allclose(np.abs(phi), 1.0, rtol=0, atol=_UNIT_ATOL):
        raise ValueError("beamforming vector entries must be unit modulus")
    return phi


def _sinr_value(num_gain: float, interference: float, p: float, sigma2: float) -> float:
    den = p * interference + sigma2
    if den <= 0:
        return float("inf") if num_gain > 0 else 0.0
    return p * num_gain / den


def sinr(phi, problem: BeamformingProblem) -> float:
    """SINR of a unit-modulus vector against the estimated channels."""
    phi = _check_unit_modulus(phi, problem.size)
    num = abs(np.vdot(phi, problem.g_hat)) ** 2
    interference = float(np.real(np.vdot(phi, problem.error_cov @ phi)))
    return _sinr_value(num, interference, problem.p, problem.sigma2)


def fractional_objective(phi, problem: BeamformingProblem) -> float:
    """The relaxation-side objective phi^H G phi / (phi^H Ra phi + 1).

    Equals ``sinr(phi) * sigma2 / p``; kept separate so bound comparisons can
    stay in one unit system.
    """
    return sinr(phi, problem) * problem.sigma2 / problem.p


def rate_from_sinr(sinr_value: float, m: int, m0: int, gamma: float) -> float:
    """Per-block rate in bps/Hz: prelog (m0-m)/m0 on log2(1 + sinr/gamma)."""
    if not 0 < m < m0:
        raise ValueError(f"need 0 < pilots ({m}) < block length ({m0})")
    if gamma < 1:
        raise ValueError("rate gap must be >= 1")
    return (m0 - m) / m0 * float(np.log2(1.0 + sinr_value / gamma))


def rate(phi, problem: BeamformingProblem, m: int, m0: int, gamma: float) -> float:
    """Average achievable rate of the block for the given beamforming vector."""
    return rate_from_sinr(sinr(phi, problem), m, m0, gamma)


def normalize_global_phase(phi) -> np.ndarray:
    """Rotate so the first entry is real nonnegative; the SINR is invariant."""
    phi = np.asarray(phi, dtype=complex)
    return phi * np.exp(-1j * np.angle(phi[0]))


def _candidate_values(num, den, p):
    """SINR values with a zero denominator mapped to +inf (or 0 at no signal)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = p * num / den
    vals = np.where(den <= 0, np.where(num > 0, np.inf, 0.0), vals)
    return vals


def _ascend(phi, units, g, r, p, sigma2, epsilon):
    """Cyclic coordinate ascent over the candidate set ``units``.

    Incremental bookkeeping keeps one coordinate update O(n).  A candidate
    replaces the incumbent only on a strict improvement, so ties keep the
    current value and the ascent cannot oscillate.  When the interference
    and noise terms vanish (sigma2 = 0 with exact estimates) every SINR is
    infinite; candidates are then ranked by the raw gain |phi^H g|^2.
    """
    phi = np.array(phi, dtype=complex)
    n = phi.size
    v = r @ phi
    s = np.vdot(phi, g)
    q = float(np.real(np.vdot(phi, v)))
    rdiag = np.real(np.diag(r))
    current = _sinr_value(abs(s) ** 2, q, p, sigma2)
    current_gain = abs(s) ** 2
    sweeps = 0
    while True:
        sweep_start = current
        changed = False
        for l in range(n):
            delta = units - phi[l]
            s_cand = s + np.conj(delta) * g[l]
            q_cand = q + 2.0 * np.real(np.conj(delta) * v[l]) + np.abs(delta) ** 2 * rdiag[l]
            num = np.abs(s_cand) ** 2
            vals = _candidate_values(num, p * q_cand + sigma2, p)
            k = int(np.argmax(vals))
            if np.isinf(vals[k]):
                infs = np.flatnonzero(np.isinf(vals))
                k = int(infs[np.argmax(num[infs])])
                accept = num[k] > current_gain if np.isinf(current) else True
            else:
                accept = vals[k] > current
            if accept:
                step = delta[k]
                s = s_cand[k]
                q = float(q_cand[k])
                v = v + step * r[:, l]
                phi[l] = units[k]
                current = float(vals[k])
                current_gain = float(num[k])
                changed = True
        sweeps += 1
        if not changed:
            break
        if epsilon > 0 and np.isfinite(sweep_start) and sweep_start > 0:
            if (current - sweep_start) / sweep_start < epsilon:
                break
    return phi, current, sweeps


def successive_refinement(
    phi0,
    problem: BeamformingProblem,
    epsilon: float = DEFAULT_REFINEMENT_EPSILON,
    tag: str = "",
) -> BeamformingSolution:
    """One-coordinate-at-a-time ascent over the alphabet from ``phi0``.

    Sweeps run at least until one pass accepts no change, so the returned
    vector is single-coordinate optimal; ``epsilon`` additionally stops early
    once a full sweep improves the SINR by less than that relative factor.
    """
    phi0 = _check_unit_modulus(phi0, problem.size)
    phi, _, sweeps = _ascend(
        phi0,
        problem.alphabet.units,
        problem.g_hat,
        problem.error_cov,
        problem.p,
        problem.sigma2,
        epsilon,
    )
    return BeamformingSolution(phi=phi, sinr=sinr(phi, problem), initializer=tag, sweeps=sweeps)


def init_gain_max(problem: BeamformingProblem) -> np.ndarray:
    """Channel-gain-maximization start: align everything with the strongest
    subgroup, ignoring the estimation-error term."""
    g = problem.g_hat
    mags = np.abs(g)
    if not np.any(mags > 0):
        raise ValueError("degenerate input: estimated channels are all zero")
    anchor = int(np.argmax(mags))  # ties: smallest index
    target = np.angle(g) - np.angle(g[anchor])
    idx = problem.alphabet.quantize_index(target)
    phi = problem.alphabet.units[idx].astype(complex)
    phi[anchor] = 1.0
    return phi


def init_replication(prev_phi, event: SplitEvent) -> np.ndarray:
    """Carry the previous block's vector over, giving both children of the
    split their parent's phase.

    The replicated vector reproduces the previous block's element-wise
    reflection pattern exactly, so nothing is lost before refinement.  The
    first block has no predecessor and uses the relaxation-based start
    instead.
    """
    if event.block < 2:
        raise ValueError("replication needs a previous block")
    prev_phi = np.asarray(prev_phi, dtype=complex).reshape(-1)
    per_group = event.block - 1
    if prev_phi.size % per_group:
        raise ValueError(
            f"previous vector length {prev_phi.size} is not a multiple of {per_group}"
        )
    if not 1 <= event.parent <= per_group:
        raise ValueError(f"parent position {event.parent} outside 1..{per_group}")
    groups = prev_phi.reshape(-1, per_group)
    return np.insert(groups, event.parent - 1, groups[:, event.parent - 1], axis=1).reshape(-1)


def init_sdr(
    problem: BeamformingProblem,
    rng,
    n_draws: int = DEFAULT_RANDOMIZATION_DRAWS,
    tol: float = 1e-3,
):
    """Relaxation-based start: solve the lifted SDP, randomize, quantize.

    Returns ``(phi, tag)``; if the solver fails to converge the gain-max
    start is used instead and the tag records the fallback.  The default
    solver tolerance is loose because the solution only seeds the coordinate
    ascent through its randomization covariance.
    """
    r_a = problem.scaled_interference()
    try:
        solution = solve_relaxation(SdpProblem(g=problem.outer(), r=r_a), tol=tol)
    except SolverFailure:
        return init_gain_max(problem), "gain-max(sdr-fallback)"
    relaxed = gaussian_randomization(solution.lifted(), problem.outer(), r_a, n_draws, rng)
    idx = problem.alphabet.quantize_index(np.angle(relaxed))
    return problem.alphabet.units[idx].astype(complex), "sdr"


_CHUNK = 8192


def exhaustive_search(problem: BeamformingProblem) -> BeamformingSolution:
    """Global optimum by enumerating every alphabet assignment.

    Guarded to bits * dimension <= 20; ties resolve to the first vector in
    lexicographic phase-index order.
    """
    n = problem.size
    bits = problem.alphabet.bits
    if bits * n > EXHAUSTIVE_BITS_LIMIT:
        raise SizeLimitError(
            f"exhaustive search needs bits*n <= {EXHAUSTIVE_BITS_LIMIT}, got {bits * n}"
        )
    units = problem.alphabet.units
    k = problem.alphabet.levels
    g = problem.g_hat
    r = problem.error_cov
    p, sigma2 = problem.p, problem.sigma2
    total = k**n
    best = (-np.inf, -np.inf)  # (sinr, gain), gain breaks infinite-SINR ties
    best_phi = None
    for start in range(0, total, _CHUNK):
        count = min(_CHUNK, total - start)
        flat = np.array(np.unravel_index(np.arange(start, start + count), (k,) * n)).T
        cand = units[flat]
        num = np.abs(cand.conj() @ g) ** 2
        interference = np.real(np.einsum("ci,ij,cj->c", cand.conj(), r, cand))
        vals = _candidate_values(num, p * interference + sigma2, p)
        # Gain only separates candidates whose SINR is infinite; finite-SINR
        # ties resolve to the first (lexicographic) index via argmax.
        gain_key = np.where(np.isinf(vals), num, 0.0)
        at_max = np.flatnonzero(vals == vals.max())
        pos = int(at_max[np.argmax(gain_key[at_max])])
        if (vals[pos], gain_key[pos]) > best:
            best = (float(vals[pos]), float(gain_key[pos]))
            best_phi = cand[pos].copy()
    return BeamformingSolution(phi=best_phi, sinr=best[0], initializer="exhaustive", sweeps=0)


def sinr_upper_bound(problem: BeamformingProblem) -> float:
    """Finite cap on the fractional objective: n * lambda_max(B^-1 G) with
    B = Ra + I/n, whose quadratic form is exactly 1 on unit-modulus vectors.

    Returned in fractional-objective units (multiply by p/sigma2 for SINR);
    with the rank-one objective the eigenvalue is g^H B^-1 g.
    """
    n = problem.size
    g = problem.g_hat
    b = problem.scaled_interference() + np.eye(n) / n
    return float(n * np.real(np.vdot(g, np.linalg.solve(b, g))))


_FINE_GRID_BITS = 12


def continuous_upper_bound(
    problem: BeamformingProblem,
    rng,
    n_draws: int = DEFAULT_RANDOMIZATION_DRAWS,
    tol: float = 1e-6,
) -> float:
    """SINR of the best unit-modulus vector with unconstrained phases.

    Solves the relaxation, randomizes without quantization, and polishes the
    winner (and the phase-aligned candidate) by coordinate ascent on a fine
    phase grid, so the reference dominates every discrete design refined from
    the same data.  Solver failures propagate.
    """
    g = problem.g_hat
    if not np.any(np.abs(g) > 0):
        return 0.0
    r_a = problem.scaled_interference()
    solution = solve_relaxation(SdpProblem(g=problem.outer(), r=r_a), tol=tol)
    starts = [
        gaussian_randomization(solution.lifted(), problem.outer(), r_a, n_draws, rng),
        np.exp(1j * np.angle(g)),
    ]
    grid = np.exp(2j * np.pi * np.arange(1 << _FINE_GRID_BITS) / (1 << _FINE_GRID_BITS))
    best = 0.0
    for phi0 in starts:
        _, value, _ = _ascend(
            phi0, grid, g, problem.error_cov, problem.p, problem.sigma2,
            DEFAULT_REFINEMENT_EPSILON,
        )
        best = max(best, value)
    return best
