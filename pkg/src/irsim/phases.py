"""Discrete phase-shift alphabets and quantization of unit-modulus coefficients.

Every reflection coefficient in the simulator is a point on the unit circle
whose phase belongs to a uniform alphabet of ``2**bits`` values.  Phases are
tracked as integer indices into the alphabet so that products and matrix
constructions stay exact; complex values are materialized on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseAlphabet:
    """Uniform phase set {0, step, ..., (K-1)*step} with K = 2**bits levels."""

    bits: int

    def __post_init__(self):
        if not isinstance(self.bits, (int, np.integer)) or self.bits < 1:
            raise ValueError(f"bits must be a positive integer, got {self.bits!r}")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def step(self) -> float:
        return TWO_PI / self.levels

    @property
    def phases(self) -> np.ndarray:
        return self.step * np.arange(self.levels)

    @property
    def units(self) -> np.ndarray:
        """Complex unit-circle values of all alphabet members.

        Values at multiples of pi/2 are patched to be exact so that the
        two-level alphabet is exactly {+1, -1} and products of sign matrices
        invert without float residue.
        """
        k = self.levels
        u = np.exp(1j * self.phases)
        u[0] = 1.0
        if k % 2 == 0:
            u[k // 2] = -1.0
        if k % 4 == 0:
            u[k // 4] = 1.0j
            u[3 * k // 4] = -1.0j
        return u

    def unit(self, index):
        """Complex value(s) for integer alphabet index/indices."""
        return self.units[np.asarray(index) % self.levels]

    def index_from_steps(self, steps) -> np.ndarray:
        """Nearest alphabet index for phases given in units of ``step``.

        An exact half-step tie is bracketed by the phases theta -+ step/2;
        the smaller of the two (the one just below theta) wins, i.e. ties
        round down in phase.  Used directly by matrix constructors that know
        their target phases as exact rationals.
        """
        x = np.asarray(steps, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("phase must be finite")
        return np.ceil(x - 0.5).astype(np.int64) % self.levels

    def quantize_index(self, theta) -> np.ndarray:
        """Index of the alphabet phase closest (chordal distance) to ``theta``."""
        return self.index_from_steps(np.asarray(theta, dtype=float) / self.step)

    def index_of(self, value) -> int:
        """Alphabet index of an existing member; rejects non-members."""
        value = complex(value)
        if not np.isclose(abs(value), 1.0, rtol=0, atol=1e-9):
            raise ValueError(f"{value!r} is not unit modulus")
        idx = int(self.quantize_index(np.angle(value)))
        if not np.isclose(self.units[idx], value, rtol=0, atol=1e-9):
            raise ValueError(f"{value!r} is not a member of the {self.bits}-bit alphabet")
        return idx


def quantize_phase(theta: float, alphabet: PhaseAlphabet) -> complex:
    """Quantize an angle onto the alphabet, returning the unit-modulus value.

    Picks the member minimizing |e^{j w} - e^{j theta}|; on an exact tie the
    smaller phase wins, which keeps repeated experiments reproducible.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        return complex(alphabet.units[int(alphabet.quantize_index(theta))])
    return alphabet.unit(alphabet.quantize_index(theta))


def product(a: complex, b: complex, alphabet: PhaseAlphabet) -> complex:
    """Product of two alphabet members, computed exactly on phase indices.

    The alphabet is a group under phase addition modulo 2*pi, so the result
    is guaranteed to be another member.
    """
    ia = alphabet.index_of(a)
    ib = alphabet.index_of(b)
    return complex(alphabet.units[(ia + ib) % alphabet.levels])
