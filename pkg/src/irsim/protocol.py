"""Frame-level orchestration: train, estimate, beamform, account for rate.

One frame = a sequence of blocks over a fixed channel realization.  Every
block sends pilots through the block's training reflection pattern, updates
the progressive estimate, designs the data-transmission beamforming from the
estimates, and records both the design SINR (against estimated channels) and
the realized SNR (against the true ones).  Feedback of the chosen phases is
modeled as error-free with zero delay.

Also provides the two benchmark schemes: progressive random phase shifts
with selection, and one-shot estimation of every element's channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import beamforming as bf
from .channel import (
    Geometry,
    LinkParams,
    aggregate,
    default_geometry,
    default_link_params,
    sample_channels,
)
from .estimation import ProgressiveEstimator, closed_form_intra_mse, simulate_training_rx
from .partition import training_schedule
from .phases import PhaseAlphabet
from .training import design_basis_matrix

INIT_POLICIES = ("sdr-every-block", "replication", "gain-max")
PARTITION_SCHEMES = ("symmetric", "asymmetric")


@dataclass(frozen=True, eq=False)
class FrameConfig:
    """Full parameter set for one simulated frame.

    Powers are linear watts, the rate gap is linear, and the phase alphabet
    is given by its bit count.
    """

    n: int = 80                      # reflecting elements
    m: int = 4                       # groups == pilots per block
    m0: int = 30                     # symbols per block
    i0: int = 20                     # blocks per frame
    p: float = 0.1                   # transmit power (20 dBm)
    sigma2: float = 10 ** -11.9      # noise power (-89 dBm)
    gamma: float = 10 ** 0.9         # rate gap (9 dB)
    bits: int = 1
    scheme: str = "symmetric"
    init_policy: str = "replication"
    geometry: Geometry = field(default_factory=default_geometry)
    link: LinkParams = field(default_factory=default_link_params)
    seed: int = 1

    @property
    def group_size(self) -> int:
        return self.n // self.m

    @property
    def n_blocks(self) -> int:
        """Scheduled estimation blocks: extra blocks beyond L go unused."""
        return min(self.i0, self.group_size)

    def violations(self) -> list:
        """Every broken invariant, not just the first."""
        problems = []
        if self.n < 1:
            problems.append(f"n must be positive, got {self.n}")
        if self.m < 1:
            problems.append(f"m must be positive, got {self.m}")
        elif self.n >= 1 and self.n % self.m:
            problems.append(f"n={self.n} is not divisible by m={self.m} groups")
        if not self.m < self.m0:
            problems.append(f"need pilots m={self.m} < block length m0={self.m0}")
        if self.i0 < 1:
            problems.append(f"i0 must be >= 1, got {self.i0}")
        if self.p <= 0:
            problems.append(f"transmit power must be positive, got {self.p}")
        if self.sigma2 < 0:
            problems.append(f"noise power must be >= 0, got {self.sigma2}")
        if self.gamma < 1:
            problems.append(f"rate gap must be >= 1 (linear), got {self.gamma}")
        if self.bits < 1:
            problems.append(f"bits must be >= 1, got {self.bits}")
        if self.scheme not in PARTITION_SCHEMES:
            problems.append(f"scheme must be one of {PARTITION_SCHEMES}, got {self.scheme!r}")
        if self.init_policy not in INIT_POLICIES:
            problems.append(f"init must be one of {INIT_POLICIES}, got {self.init_policy!r}")
        if self.geometry.n_elements != self.n:
            problems.append(
                f"array is {self.geometry.rows}x{self.geometry.cols}"
                f"={self.geometry.n_elements} elements but n={self.n}"
            )
        return problems

    def validate(self) -> "FrameConfig":
        problems = self.violations()
        if problems:
            raise ValueError("invalid frame configuration: " + "; ".join(problems))
        return self


@dataclass(frozen=True, eq=False)
class BlockResult:
    """Per-block outcome of one trial."""

    block: int
    initializer: str
    design_sinr: float          # SINR against estimated channels + error stats
    realized_snr: float         # p * |phi^H g_true|^2 / sigma2
    realized_gain: float        # |phi^H g_true|^2 (finite even at sigma2 = 0)
    design_rate: float
    realized_rate: float
    mse_closed_form: float
    mse_empirical: float        # ||g_hat - g_true||^2 for this trial
    normalized_mse_closed_form: float
    normalized_mse_empirical: float
    sweeps: int


class FrameSimulator:
    """Precomputes everything channel-independent for a config, then runs trials.

    Construction is the expensive part (training design, subgroup schedule,
    per-block covariances); ``run`` draws the channels and noise.
    """

    def __init__(self, config: FrameConfig):
        config.validate()
        self.config = config
        self.alphabet = PhaseAlphabet(config.bits)
        report = design_basis_matrix(config.m, self.alphabet)
        if not report.full_rank:
            raise np.linalg.LinAlgError(
                f"designed basis training matrix for m={config.m}, "
                f"bits={config.bits} is rank deficient"
            )
        self.design_report = report
        self.theta = report.matrix
        self.partitions, self.psis = training_schedule(config.group_size, config.scheme)
        self.mse_normalizer = config.sigma2 / config.p if config.sigma2 > 0 else 1.0
        self.closed_form_mse = [
            closed_form_intra_mse(self.theta, self.psis[i], config.sigma2, config.p)
            for i in range(config.n_blocks)
        ]
        self._covariances = [None] * config.n_blocks

    def covariance(self, block: int) -> np.ndarray:
        if self._covariances[block - 1] is None:
            estimator = ProgressiveEstimator(
                self.theta, self.psis, self.config.p, self.config.sigma2
            )
            self._covariances[block - 1] = estimator.covariance(block)
        return self._covariances[block - 1]

    def _initialize(self, problem, block, prev_phi, rng):
        policy = self.config.init_policy
        if policy == "gain-max":
            return bf.init_gain_max(problem), "gain-max"
        if policy == "replication" and block > 1:
            event = self.partitions[block - 1].lineage[-1]
            return bf.init_replication(prev_phi, event), "replication"
        return bf.init_sdr(problem, rng)

    def run(self, rng) -> list:
        """One trial: fresh channels, then the per-block training/data loop."""
        cfg = self.config
        realization = sample_channels(cfg.geometry, cfg.link, rng)
        estimator = ProgressiveEstimator(self.theta, self.psis, cfg.p, cfg.sigma2)
        results = []
        prev_phi = None
        for block in range(1, cfg.n_blocks + 1):
            partition = self.partitions[block - 1]
            g_true = aggregate(realization, [partition] * cfg.m)
            # True per-group effective channels seen through this block's
            # subgroup reflection coefficients (the last schedule row).
            psi_row = self.psis[block - 1].matrix[-1]
            h_eff = g_true.reshape(cfg.m, block) @ psi_row
            y = simulate_training_rx(self.theta, h_eff, cfg.p, cfg.sigma2, rng)
            estimate = estimator.process_block(y)
            problem = bf.BeamformingProblem(
                g_hat=estimate.subgroup_channels,
                error_cov=self.covariance(block),
                p=cfg.p,
                sigma2=cfg.sigma2,
                alphabet=self.alphabet,
            )
            phi0, tag = self._initialize(problem, block, prev_phi, rng)
            solution = bf.successive_refinement(phi0, problem, tag=tag)
            prev_phi = solution.phi
            realized_gain = float(abs(np.vdot(solution.phi, g_true)) ** 2)
            realized_snr = (
                cfg.p * realized_gain / cfg.sigma2 if cfg.sigma2 > 0 else float("inf")
            )
            mse_emp = float(np.sum(np.abs(estimate.subgroup_channels - g_true) ** 2))
            results.append(
                BlockResult(
                    block=block,
                    initializer=solution.initializer,
                    design_sinr=solution.sinr,
                    realized_snr=realized_snr,
                    realized_gain=realized_gain,
                    design_rate=bf.rate_from_sinr(solution.sinr, cfg.m, cfg.m0, cfg.gamma),
                    realized_rate=bf.rate_from_sinr(realized_snr, cfg.m, cfg.m0, cfg.gamma),
                    mse_closed_form=self.closed_form_mse[block - 1],
                    mse_empirical=mse_emp,
                    normalized_mse_closed_form=self.closed_form_mse[block - 1]
                    / self.mse_normalizer,
                    normalized_mse_empirical=mse_emp / self.mse_normalizer,
                    sweeps=solution.sweeps,
                )
            )
        return results


def run_frame(config: FrameConfig, rng) -> list:
    """Convenience wrapper; build a FrameSimulator directly for many trials."""
    return FrameSimulator(config).run(rng)


def run_random_selection_benchmark(config: FrameConfig, rng) -> list:
    """Progressive random phase shifts with selection.

    Each block tries m fresh random element-wise patterns during training and
    keeps the best pattern seen so far (by true beamforming gain) for data
    transmission.
    """
    config.validate()
    alphabet = PhaseAlphabet(config.bits)
    units = alphabet.units
    realization = sample_channels(config.geometry, config.link, rng)
    cascaded = realization.cascaded
    best_gain = 0.0
    results = []
    for block in range(1, config.n_blocks + 1):
        draws = rng.integers(0, alphabet.levels, size=(config.m, config.n))
        gains = np.abs(units[draws] @ cascaded) ** 2
        best_gain = max(best_gain, float(gains.max()))
        snr = config.p * best_gain / config.sigma2 if config.sigma2 > 0 else float("inf")
        rate = bf.rate_from_sinr(snr, config.m, config.m0, config.gamma)
        results.append(
            BlockResult(
                block=block,
                initializer="random-selection",
                design_sinr=snr,
                realized_snr=snr,
                realized_gain=best_gain,
                design_rate=rate,
                realized_rate=rate,
                mse_closed_form=float("nan"),
                mse_empirical=float("nan"),
                normalized_mse_closed_form=float("nan"),
                normalized_mse_empirical=float("nan"),
                sweeps=0,
            )
        )
    return results


def all_at_once_config(config: FrameConfig) -> FrameConfig:
    """The equivalent one-shot configuration: every element its own group."""
    return replace(config, m=config.n, m0=max(config.m0, config.n + 1), i0=1)


def run_all_at_once_benchmark(config: FrameConfig, rng) -> BlockResult:
    """One-shot estimation of all element channels, then beamforming.

    Training costs n pilot symbols.  The returned result carries the raw SNR;
    use :func:`all_at_once_rates` for the two prelog conventions.
    """
    results = FrameSimulator(all_at_once_config(config)).run(rng)
    return results[0]


def all_at_once_rates(config: FrameConfig, sinr_value: float) -> dict:
    """Both prelog accountings for the one-shot benchmark's rate.

    ``block``: pilots charged against a single block of max(m0, n+1) symbols.
    ``frame``: the n pilot symbols amortized over the whole frame i0 * m0.
    """
    m0_block = max(config.m0, config.n + 1)
    log_term = float(np.log2(1.0 + sinr_value / config.gamma))
    frame_symbols = config.i0 * config.m0
    frame_prelog = max(frame_symbols - config.n, 0) / frame_symbols
    return {
        "block": (m0_block - config.n) / m0_block * log_term,
        "frame": frame_prelog * log_term,
    }
