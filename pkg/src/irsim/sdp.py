"""Small dense semidefinite solver for the lifted beamforming relaxation.

The program solved here is the fractional SINR relaxation after lifting
``phi phi^H`` to a PSD matrix and applying the scale substitution that turns
the ratio objective linear:

    maximize    tr(G A)
    subject to  tr(R A) + xi = 1,
                A[l, l] = xi for all l,
                A >= 0 (PSD),

with G, R Hermitian PSD and dimensions up to around one hundred.  The solver
is a first-order splitting scheme (ADMM) that alternates a projection onto
the affine constraint subspace, with the linear objective folded in, and a
projection onto the PSD cone via eigendecomposition.  All residuals in the
returned solution are recomputed from the final iterate, never trusted from
the loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 50_000

_HERMITIAN_RTOL = 1e-8


class SolverFailure(RuntimeError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message: str, solution: "SdpSolution"):
        super().__init__(message)
        self.solution = solution


def _check_hermitian_psd(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = max(float(np.linalg.norm(m)), 1.0)
    if np.linalg.norm(m - m.conj().T) > _HERMITIAN_RTOL * scale:
        raise ValueError(f"{name} must be Hermitian")
    m = (m + m.conj().T) / 2.0
    w = np.linalg.eigvalsh(m)
    if w.min() < -_HERMITIAN_RTOL * scale:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Problem data: objective matrix ``g`` and constraint matrix ``r``."""

    g: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        g = _check_hermitian_psd("objective matrix", self.g)
        r = _check_hermitian_psd("constraint matrix", self.r)
        if g.shape != r.shape:
            raise ValueError("objective and constraint matrices must have equal shape")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "r", r)

    @property
    def dimension(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True, eq=False)
class SdpSolution:
    a: np.ndarray
    xi: float
    objective: float
    psd_residual: float       # max(0, -min eigenvalue of a)
    affine_residual: float    # worst violation of the equality constraints
    iterations: int
    converged: bool
    xi_at_boundary: bool      # xi clamped near zero; scale recovery is suspect

    def lifted(self) -> np.ndarray:
        """The unit-diagonal matrix a / xi used for randomization."""
        phi = self.a / self.xi
        return (phi + phi.conj().T) / 2.0


class _AffineProjector:
    """Orthogonal projection onto {tr(R A) + A_11 = 1, diag(A) all equal}."""

    def __init__(self, r: np.ndarray):
        n = r.shape[0]
        self._r = r
        self._n = n
        gram = np.empty((n, n))
        rdiag = np.real(np.diag(r))
        gram[0, 0] = float(np.linalg.norm(r)) ** 2 + 2.0 * rdiag[0] + 1.0
        gram[0, 1:] = rdiag[1:] - rdiag[0] - 1.0
        gram[1:, 0] = gram[0, 1:]
        gram[1:, 1:] = np.eye(n - 1) + 1.0
        self._gram_inv = np.linalg.inv(gram)

    def __call__(self, b: np.ndarray) -> np.ndarray:
        bdiag = np.real(np.diag(b))
        resid = np.empty(self._n)
        resid[0] = np.real(np.vdot(self._r, b)) + bdiag[0] - 1.0
        resid[1:] = bdiag[1:] - bdiag[0]
        lam = self._gram_inv @ resid
        a = b - lam[0] * self._r
        diag_correction = np.empty(self._n)
        diag_correction[0] = -lam[0] + lam[1:].sum()
        diag_correction[1:] = -lam[1:]
        idx = np.arange(self._n)
        a[idx, idx] = a[idx, idx] + diag_correction
        return a


def _project_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def _assemble(problem, a, iterations, converged, tol):
    a = (a + a.conj().T) / 2.0
    diag = np.real(np.diag(a))
    xi = float(diag.mean())
    w = np.linalg.eigvalsh(a)
    psd_residual = float(max(0.0, -w.min()))
    affine_residual = float(
        max(
            abs(np.real(np.vdot(problem.r, a)) + xi - 1.0),
            np.abs(diag - xi).max(),
        )
    )
    boundary = xi < tol
    xi = max(xi, tol)
    return SdpSolution(
        a=a,
        xi=xi,
        objective=float(np.real(np.vdot(problem.g, a))),
        psd_residual=psd_residual,
        affine_residual=affine_residual,
        iterations=iterations,
        converged=converged,
        xi_at_boundary=boundary,
    )


def solve_relaxation(
    problem: SdpProblem,
    tol: float = DEFAULT_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> SdpSolution:
    """Solve the lifted relaxation to the requested residual tolerance.

    The returned iterate satisfies the affine constraints to machine
    precision (it is the output of the affine projection) and is PSD up to
    ``tol``.  Non-convergence raises :class:`SolverFailure` carrying the best
    iterate and its residuals.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n = problem.dimension
    g_scale = max(float(np.linalg.norm(problem.g)), 1e-30)
    g = problem.g / g_scale
    project_affine = _AffineProjector(problem.r)

    rho = 1.0
    over_relax = 1.8
    z = np.eye(n, dtype=complex)
    u = np.zeros((n, n), dtype=complex)
    a = z
    iterations = 0
    check_every = 10
    while iterations < max_iterations:
        for _ in range(check_every):
            a = project_affine(z - u + g / rho)
            w = over_relax * a + (1.0 - over_relax) * z + u
            z_new = _project_psd(w)
            u = w - z_new
            z_prev, z = z, z_new
            iterations += 1
        primal = float(np.linalg.norm(a - z))
        dual = float(rho * np.linalg.norm(z - z_prev))
        scale_p = max(1.0, float(np.linalg.norm(a)))
        scale_d = max(1.0, float(rho * np.linalg.norm(u)))
        if primal <= tol * scale_p and dual <= tol * scale_d:
            # Relative stopping reached; accept only if the contract's
            # absolute PSD residual also holds.
            candidate = _assemble(problem, a, iterations, True, tol)
            if candidate.psd_residual <= tol:
                return candidate
        if primal > 10.0 * dual and rho < 1e6:
            rho *= 2.0
            u /= 2.0
        elif dual > 10.0 * primal and rho > 1e-6:
            rho /= 2.0
            u *= 2.0
    best = _assemble(problem, a, iterations, False, tol)
    raise SolverFailure(
        f"no convergence within {max_iterations} iterations "
        f"(psd residual {best.psd_residual:.2e})",
        best,
    )


def gaussian_randomization(phi, g, r, n_draws: int, rng) -> np.ndarray:
    """Best unit-modulus vector among randomized samples of the lifted solution.

    Samples zero-mean complex Gaussians with covariance ``phi`` (negative
    eigenvalues clipped before factorization), maps each entrywise onto the
    unit circle, and keeps the sample maximizing the fractional objective
    x^H g x / (x^H r x + 1).  The deterministic candidate built from the
    principal eigenvector's phases is always in the running too.
    """
    phi = np.asarray(phi, dtype=complex)
    n = phi.shape[0]
    w, v = np.linalg.eigh((phi + phi.conj().T) / 2.0)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    draws = (rng.standard_normal((n, n_draws)) + 1j * rng.standard_normal((n, n_draws)))
    candidates = factor @ (draws / np.sqrt(2.0))
    principal = v[:, -1]
    candidates = np.concatenate([np.exp(1j * np.angle(candidates)),
                                 np.exp(1j * np.angle(principal))[:, None]], axis=1)
    g = np.asarray(g, dtype=complex)
    r = np.asarray(r, dtype=complex)
    num = np.real(np.einsum("ld,ld->d", candidates.conj(), g @ candidates))
    den = np.real(np.einsum("ld,ld->d", candidates.conj(), r @ candidates)) + 1.0
    return candidates[:, int(np.argmax(num / den))].copy()
