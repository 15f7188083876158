"""Uniform linear array geometry, steering vectors and analog codebooks.

Angles are azimuth-only and all lengths are expressed in carrier
wavelengths, so the arrays live in a 2-D plane.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UlaGeometry:
    """Placement of a uniform linear array in the plane.

    Parameters
    ----------
    num_elements : int
        Number of antenna elements ``Na``.
    spacing : float
        Inter-element spacing in wavelengths.
    center : tuple of float
        Array center, in wavelengths.
    axis_angle : float
        Orientation of the array axis in radians (0 = along +x).
    """

    num_elements: int
    spacing: float = 0.5
    center: tuple = (0.0, 0.0)
    axis_angle: float = 0.0

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise ValueError(f"num_elements must be a positive integer, got {self.num_elements!r}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")


@dataclass(frozen=True)
class AnalogCodebook:
    """Candidate analog beams stored column-wise in an ``Na x M`` matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[1] == 0:
            raise ValueError("codebook must be a non-empty 2-D matrix")
        if not np.allclose(np.abs(m), 1.0, rtol=0, atol=1e-12):
            raise ValueError("codebook entries must have unit magnitude")
        object.__setattr__(self, "matrix", m)

    @property
    def num_elements(self):
        return self.matrix.shape[0]

    @property
    def size(self):
        return self.matrix.shape[1]


def steering_vector(num_elements, theta, spacing=0.5):
    """ULA response ``[1, e^{j phi}, ..., e^{j (Na-1) phi}]`` with
    ``phi = 2 pi spacing cos(theta)``.

    The phase reference is the first element. With the default
    half-wavelength spacing ``phi = pi cos(theta)``.
    """
    if int(num_elements) != num_elements or num_elements < 1:
        raise ValueError(f"num_elements must be a positive integer, got {num_elements!r}")
    phi = 2.0 * np.pi * spacing * np.cos(theta)
    return np.exp(1j * phi * np.arange(num_elements))


def element_positions(geom):
    """Return an ``(Na, 2)`` array of element coordinates in wavelengths."""
    offsets = (np.arange(geom.num_elements) - (geom.num_elements - 1) / 2.0) * geom.spacing
    direction = np.array([np.cos(geom.axis_angle), np.sin(geom.axis_angle)])
    return np.asarray(geom.center, dtype=float) + offsets[:, None] * direction


def dft_codebook(num_elements):
    """DFT codebook: column ``k`` holds ``exp(-j 2 pi n k / Na)``."""
    if int(num_elements) != num_elements or num_elements < 1:
        raise ValueError(f"num_elements must be a positive integer, got {num_elements!r}")
    n = np.arange(num_elements)
    return AnalogCodebook(np.exp(-2j * np.pi * np.outer(n, n) / num_elements))


def quantize_phases(v, resolution_bits):
    """Snap every entry to the nearest point of a ``2**bits`` phase grid.

    Magnitudes are discarded: the output is unit-modulus.
    """
    if int(resolution_bits) != resolution_bits or resolution_bits < 1:
        raise ValueError(f"resolution_bits must be a positive integer, got {resolution_bits!r}")
    step = 2.0 * np.pi / 2 ** int(resolution_bits)
    levels = np.round(np.angle(np.asarray(v, dtype=complex)) / step)
    return np.exp(1j * step * levels)
