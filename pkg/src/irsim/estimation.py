"""Training reception, least-squares estimation, and error statistics.

The receiver sees ``y = sqrt(P) * T @ h + z`` during each block's pilot
portion, inverts the basis training matrix T for the per-group effective
channels, and then inverts the block's subgroup training matrix to resolve
subgroup aggregated channels.  The error covariance of the resolved channels
factors as a Kronecker product of the two inverse Gram matrices, which also
yields the closed-form MSE used throughout the experiments.

All estimation helpers broadcast over leading axes, so Monte-Carlo sweeps can
run vectorized over trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import SubgroupTrainingMatrix
from .training import RANK_RTOL, matrix_values


def _full_rank_inverse(matrix) -> np.ndarray:
    values = matrix_values(matrix)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("training matrix must be square")
    s = np.linalg.svd(values, compute_uv=False)
    if s[-1] <= RANK_RTOL * s[0]:
        raise np.linalg.LinAlgError(
            "training matrix is rank deficient; least-squares estimation infeasible"
        )
    return np.linalg.inv(values)


def _psi_values(psi) -> np.ndarray:
    if isinstance(psi, SubgroupTrainingMatrix):
        return psi.matrix
    return np.asarray(psi)


def simulate_training_rx(theta_s, h_eff, p: float, sigma2: float, rng) -> np.ndarray:
    """Received pilot vector sqrt(p) * T @ h_eff plus circular Gaussian noise.

    ``h_eff`` may carry leading batch axes; one independent noise vector is
    drawn per batch entry.
    """
    values = matrix_values(theta_s)
    h_eff = np.asarray(h_eff, dtype=complex)
    if h_eff.shape[-1] != values.shape[1]:
        raise ValueError(
            f"effective channel length {h_eff.shape[-1]} does not match "
            f"training matrix width {values.shape[1]}"
        )
    if p < 0 or sigma2 < 0:
        raise ValueError("powers must be nonnegative")
    clean = np.sqrt(p) * (h_eff @ values.T)
    noise = (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + np.sqrt(sigma2 / 2.0) * noise


def ls_per_group(y, theta_s, p: float) -> np.ndarray:
    """Least-squares per-group effective channels: T^-1 @ y / sqrt(p).

    Raises ``LinAlgError`` for a rank-deficient training matrix; this is how
    an infeasible basis design surfaces.
    """
    inv = _full_rank_inverse(theta_s)
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != inv.shape[1]:
        raise ValueError("received vector length does not match the training matrix")
    return (y @ inv.T) / np.sqrt(p)


def resolve_subgroups(eta_hat, psi) -> np.ndarray:
    """Subgroup aggregated channels from stacked effective channels."""
    values = _psi_values(psi)
    inv = _full_rank_inverse(values)
    eta_hat = np.asarray(eta_hat, dtype=complex)
    if eta_hat.shape[-1] != inv.shape[1]:
        raise ValueError(
            f"stacked channel length {eta_hat.shape[-1]} does not match "
            f"block count {inv.shape[1]}"
        )
    return eta_hat @ inv.T


def error_covariance(theta_s, psi, sigma2: float, p: float) -> np.ndarray:
    """Covariance of the resolved-channel error, group-major ordering.

    R = (sigma2/p) * (T^H T)^-1 kron (S^T S)^-1 for basis matrix T and
    subgroup matrix S; its trace is the closed-form estimation MSE.
    """
    t = matrix_values(theta_s)
    s = _psi_values(psi)
    gram_t_inv = _full_rank_inverse(t.conj().T @ t)
    gram_s_inv = _full_rank_inverse(s.conj().T @ s)
    r = (sigma2 / p) * np.kron(gram_t_inv, gram_s_inv)
    return (r + r.conj().T) / 2.0


def closed_form_intra_mse(theta_s, psi, sigma2: float, p: float) -> float:
    """(sigma2/p) * tr((T^H T)^-1) * tr((S^T S)^-1); equals tr(error_covariance)."""
    t = matrix_values(theta_s)
    s = _psi_values(psi)
    st = np.linalg.svd(t, compute_uv=False)
    ss = np.linalg.svd(s, compute_uv=False)
    if st[-1] <= RANK_RTOL * st[0] or ss[-1] <= RANK_RTOL * ss[0]:
        raise np.linalg.LinAlgError("training matrices must be full rank")
    return float((sigma2 / p) * np.sum(1.0 / st**2) * np.sum(1.0 / ss**2))


@dataclass(frozen=True, eq=False)
class BlockEstimate:
    """Everything the receiver knows after the pilot portion of one block."""

    block: int
    per_group_effective: np.ndarray    # latest block's per-group estimates (M,)
    stacked_effective: np.ndarray      # per-group history, shape (M, block)
    subgroup_channels: np.ndarray      # resolved aggregated channels (block*M,)
    error_covariance: np.ndarray       # (block*M, block*M), Hermitian PSD


class ProgressiveEstimator:
    """Accumulates per-block pilot observations and resolves subgroup channels.

    One instance per trial; independent trials are safe to run in parallel.
    """

    def __init__(self, theta_s, psis, p: float, sigma2: float):
        self._theta_inv = _full_rank_inverse(theta_s)
        self._psis = [_psi_values(m) for m in psis]
        self._psi_invs = [_full_rank_inverse(m) for m in self._psis]
        self._p = p
        self._sigma2 = sigma2
        self._theta = matrix_values(theta_s)
        m = self._theta.shape[0]
        self._history = np.zeros((m, len(psis)), dtype=complex)
        self._block = 0
        self._covariances = {}

    @property
    def n_groups(self) -> int:
        return self._theta.shape[0]

    def covariance(self, block: int) -> np.ndarray:
        """Error covariance for a block; cached, channel independent."""
        if block not in self._covariances:
            self._covariances[block] = error_covariance(
                self._theta, self._psis[block - 1], self._sigma2, self._p
            )
        return self._covariances[block]

    def process_block(self, y) -> BlockEstimate:
        """Consume one block's received pilot vector."""
        if self._block >= self._history.shape[1]:
            raise ValueError("all scheduled blocks already processed")
        h_hat = (np.asarray(y, dtype=complex) @ self._theta_inv.T) / np.sqrt(self._p)
        self._history[:, self._block] = h_hat
        self._block += 1
        i = self._block
        eta = self._history[:, :i]
        g_hat = (eta @ self._psi_invs[i - 1].T).reshape(-1)
        return BlockEstimate(
            block=i,
            per_group_effective=h_hat,
            stacked_effective=eta.copy(),
            subgroup_channels=g_hat,
            error_covariance=self.covariance(i),
        )
