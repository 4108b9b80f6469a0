"""Rician channel generation and cascaded-channel bookkeeping.

The surface is a uniform rectangular array in the y-z plane.  Link gains
follow a reference-gain power law; small-scale fading is Rician with a
planar-wavefront line-of-sight steering component (far-field: terminal
distances of tens of meters against an aperture of a few wavelengths).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Geometry:
    """Terminal positions (meters) and the reflecting array layout.

    Element pitch is given in wavelengths, so steering phases need no
    carrier frequency.  Elements raster row-major over the grid; groups take
    consecutive raster indices.
    """

    user_position: np.ndarray
    ap_position: np.ndarray
    irs_center: np.ndarray
    rows: int
    cols: int
    spacing: float = 0.5

    def __post_init__(self):
        for name in ("user_position", "ap_position", "irs_center"):
            pos = np.asarray(getattr(self, name), dtype=float)
            if pos.shape != (3,) or not np.all(np.isfinite(pos)):
                raise ValueError(f"{name} must be a finite 3-D point")
            object.__setattr__(self, name, pos)
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have positive dimensions")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    def element_offsets(self) -> np.ndarray:
        """Element offsets from the array center in wavelengths, shape (N, 3)."""
        r = np.arange(self.rows) - (self.rows - 1) / 2.0
        c = np.arange(self.cols) - (self.cols - 1) / 2.0
        zz, yy = np.meshgrid(r, c, indexing="ij")
        out = np.zeros((self.n_elements, 3))
        out[:, 1] = self.spacing * yy.ravel()
        out[:, 2] = self.spacing * zz.ravel()
        return out


@dataclass(frozen=True)
class LinkParams:
    """Large- and small-scale fading parameters, all in linear units."""

    beta0: float        # reference gain at 1 m
    alpha_ui: float     # user-surface path loss exponent
    alpha_ia: float     # surface-AP path loss exponent
    k_ui: float         # user-surface Rician factor
    k_ia: float         # surface-AP Rician factor

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ValueError("reference gain must be positive")
        if self.alpha_ui < 0 or self.alpha_ia < 0:
            raise ValueError("path loss exponents must be >= 0")
        if self.k_ui < 0 or self.k_ia < 0:
            raise ValueError("Rician factors must be >= 0")


def default_geometry() -> Geometry:
    """User at (20,40,0), AP at (20,0,0), 8x10 surface centered at (18,30,0)."""
    return Geometry(
        user_position=np.array([20.0, 40.0, 0.0]),
        ap_position=np.array([20.0, 0.0, 0.0]),
        irs_center=np.array([18.0, 30.0, 0.0]),
        rows=8,
        cols=10,
    )


def default_link_params() -> LinkParams:
    """-30 dB reference gain, exponents 2.2 / 2.5, Rician 3 dB / -20 dB."""
    return LinkParams(
        beta0=1e-3,
        alpha_ui=2.2,
        alpha_ia=2.5,
        k_ui=10 ** 0.3,
        k_ia=10 ** -2.0,
    )


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of the element-wise channels.

    ``cascaded[n] = conj(h_ia[n]) * h_ui[n]`` is the only quantity the
    receiver can estimate; ``h_ia`` is stored un-conjugated.
    """

    h_ui: np.ndarray
    h_ia: np.ndarray
    cascaded: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.cascaded.shape[0]

    def group_channels(self, n_groups: int) -> np.ndarray:
        """Cascaded channels as an (n_groups, L) array of adjacent slices."""
        n = self.n_elements
        if n % n_groups:
            raise ValueError(f"{n} elements do not split into {n_groups} groups")
        return self.cascaded.reshape(n_groups, n // n_groups)


def path_loss(d: float, alpha: float, params: LinkParams) -> float:
    """Distance power law beta0 * d**(-alpha), d in meters."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return params.beta0 * d ** (-alpha)


def steering_vector(geometry: Geometry, target: np.ndarray) -> np.ndarray:
    """Unit-modulus planar-wavefront array response toward ``target``."""
    target = np.asarray(target, dtype=float)
    delta = target - geometry.irs_center
    dist = np.linalg.norm(delta)
    if dist <= 0:
        raise ValueError("target coincides with the array center")
    u = delta / dist
    return np.exp(2j * np.pi * geometry.element_offsets() @ u)


def _rician_link(geometry, terminal, gain, k_factor, rng):
    los = steering_vector(geometry, terminal)
    n = geometry.n_elements
    nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    mix = np.sqrt(k_factor / (k_factor + 1.0)) * los + np.sqrt(1.0 / (k_factor + 1.0)) * nlos
    return np.sqrt(gain) * mix


def sample_channels(geometry: Geometry, params: LinkParams, rng) -> ChannelRealization:
    """Draw one Rician realization of both links plus the cascaded product.

    Consumes the stream in a fixed order (user-surface first), so trials are
    reproducible from the seed alone.
    """
    d_ui = float(np.linalg.norm(geometry.user_position - geometry.irs_center))
    d_ia = float(np.linalg.norm(geometry.ap_position - geometry.irs_center))
    h_ui = _rician_link(geometry, geometry.user_position,
                        path_loss(d_ui, params.alpha_ui, params), params.k_ui, rng)
    h_ia = _rician_link(geometry, geometry.ap_position,
                        path_loss(d_ia, params.alpha_ia, params), params.k_ia, rng)
    return ChannelRealization(h_ui=h_ui, h_ia=h_ia, cascaded=np.conj(h_ia) * h_ui)


def aggregate(realization: ChannelRealization, partitions) -> np.ndarray:
    """Stack per-subgroup channel sums group-major into a length-i*M vector."""
    partitions = list(partitions)
    blocks = {p.block for p in partitions}
    if len(blocks) > 1:
        raise ValueError(f"partitions are at different blocks: {sorted(blocks)}")
    groups = realization.group_channels(len(partitions))
    out = []
    for h_m, part in zip(groups, partitions):
        if part.group_size != groups.shape[1]:
            raise ValueError("partition group size does not match the channel slices")
        for members in part.subgroups:
            out.append(sum(h_m[n - 1] for n in members))
    return np.array(out, dtype=complex)
