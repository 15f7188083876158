"""Random channel generation for the desired links and the self-interference.

Desired links follow an extended Saleh-Valenzuela clustered model. The
self-interference (SI) channel is Rician: a deterministic near-field
spherical-wave LOS part plus a sparse clustered NLOS part.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .array_geometry import UlaGeometry, element_positions, steering_vector


class ChannelKind(str, enum.Enum):
    DESIRED = "desired"
    SI_LOS = "si_los"
    SI_NLOS = "si_nlos"
    SI_COMPOSITE = "si_composite"


class InvalidGeometryError(ValueError):
    """Raised when two array elements coincide."""


@dataclass(frozen=True)
class ChannelMatrix:
    """``Nr x Nt`` channel; ``num_paths`` is the ray total for clustered draws."""

    h: np.ndarray
    kind: ChannelKind
    num_paths: int = None

    @property
    def nr(self):
        return self.h.shape[0]

    @property
    def nt(self):
        return self.h.shape[1]


@dataclass(frozen=True)
class ClusteredChannelParams:
    """Statistics of the clustered channel.

    Cluster and ray counts are drawn uniformly on the inclusive integer
    intervals. Each cluster gets a uniform mean angle (independently for
    departure and arrival) and its rays scatter around it with a Laplacian of
    the given standard deviation.
    """

    clusters_range: tuple = (1, 6)
    rays_range: tuple = (1, 10)
    angle_mean_range: tuple = (0.0, np.pi)
    angular_std: float = 0.2

    def __post_init__(self):
        for name in ("clusters_range", "rays_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must satisfy 1 <= low <= high, got {(lo, hi)}")
        if not self.angular_std > 0:
            raise ValueError(f"angular_std must be positive, got {self.angular_std}")


SI_NLOS_PARAMS = ClusteredChannelParams(clusters_range=(1, 3), rays_range=(1, 3))


@dataclass(frozen=True)
class SiGeometry:
    """Relative placement of the transmit and receive arrays of a FD node.

    The transmit array sits at the origin along the x axis. The receive
    array center is ``separation`` wavelengths away at bearing ``angle`` and
    its axis is rotated by ``rx_axis_angle``.
    """

    nt: int
    nr: int
    separation: float = 10.0
    angle: float = np.pi / 6
    rx_axis_angle: float = np.pi / 6
    spacing: float = 0.5

    def __post_init__(self):
        if not self.separation > 0:
            raise ValueError(f"separation must be positive, got {self.separation}")

    @property
    def tx_array(self):
        return UlaGeometry(self.nt, self.spacing, (0.0, 0.0), 0.0)

    @property
    def rx_array(self):
        center = (self.separation * np.cos(self.angle), self.separation * np.sin(self.angle))
        return UlaGeometry(self.nr, self.spacing, center, self.rx_axis_angle)

    def distances(self):
        """``(Nr, Nt)`` matrix of receive-to-transmit element distances."""
        rx = element_positions(self.rx_array)
        tx = element_positions(self.tx_array)
        return np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)


def sample_laplacian(mean, std, rng, size=None):
    """Laplace draw with the given mean and *standard deviation*.

    The Laplace scale is ``std / sqrt(2)`` so that the variance is ``std**2``.
    """
    if not std > 0:
        raise ValueError(f"std must be positive, got {std}")
    return rng.laplace(mean, std / np.sqrt(2.0), size)


def laplacian_inverse_cdf(u, mean, std):
    """Quantile function matching :func:`sample_laplacian`."""
    b = std / np.sqrt(2.0)
    u = np.asarray(u, dtype=float)
    return mean - b * np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))


def clustered_channel_from_rays(gains, aoas, aods, nt, nr, kind=ChannelKind.DESIRED):
    """Assemble a clustered channel from explicit per-ray parameters.

    Array responses are normalized to unit norm, which is what makes the
    leading ``sqrt(Nt Nr / L)`` factor give ``E||H||_F^2 = Nt Nr``.
    """
    gains = np.ravel(gains)
    num_rays = gains.size
    a_r = np.stack([steering_vector(nr, th) for th in np.ravel(aoas)], axis=1) / np.sqrt(nr)
    a_t = np.stack([steering_vector(nt, ph) for ph in np.ravel(aods)], axis=1) / np.sqrt(nt)
    h = np.sqrt(nt * nr / num_rays) * (a_r * gains) @ a_t.conj().T
    return ChannelMatrix(h, kind, num_rays)


def gen_clustered_channel(params, nt, nr, rng, kind=ChannelKind.DESIRED):
    """Draw one clustered channel realization (``Nr x Nt``)."""
    if nt < 1 or nr < 1:
        raise ValueError("nt and nr must be >= 1")
    n_clust = int(rng.integers(params.clusters_range[0], params.clusters_range[1], endpoint=True))
    n_rays = int(rng.integers(params.rays_range[0], params.rays_range[1], endpoint=True))
    lo, hi = params.angle_mean_range
    aod_means = rng.uniform(lo, hi, n_clust)
    aoa_means = rng.uniform(lo, hi, n_clust)
    aods = sample_laplacian(np.repeat(aod_means, n_rays), params.angular_std, rng)
    aoas = sample_laplacian(np.repeat(aoa_means, n_rays), params.angular_std, rng)
    total = n_clust * n_rays
    gains = (rng.standard_normal(total) + 1j * rng.standard_normal(total)) / np.sqrt(2.0)
    return clustered_channel_from_rays(gains, aoas, aods, nt, nr, kind)


def gen_los_si_channel(geom):
    """Near-field LOS SI channel, ``rho / r * exp(-j 2 pi r)`` per element pair.

    ``rho`` is fixed so that ``||H||_F^2 = Nt Nr`` exactly.
    """
    r = geom.distances()
    if np.any(r <= 0):
        raise InvalidGeometryError("transmit and receive elements coincide (r = 0)")
    h = np.exp(-2j * np.pi * r) / r
    rho = np.sqrt(geom.nt * geom.nr) / np.linalg.norm(h)
    return ChannelMatrix(rho * h, ChannelKind.SI_LOS)


def rician_weights(kappa_db):
    """LOS and NLOS amplitude weights for a Rician factor given in dB."""
    if np.isposinf(kappa_db):
        return 1.0, 0.0
    kappa = 10.0 ** (kappa_db / 10.0)
    return np.sqrt(kappa / (kappa + 1.0)), np.sqrt(1.0 / (kappa + 1.0))


def gen_si_channel(kappa_db, geom, nlos_params, rng):
    """Composite Rician SI channel."""
    los = gen_los_si_channel(geom)
    nlos = gen_clustered_channel(nlos_params, geom.nt, geom.nr, rng, ChannelKind.SI_NLOS)
    w_los, w_nlos = rician_weights(kappa_db)
    return ChannelMatrix(w_los * los.h + w_nlos * nlos.h, ChannelKind.SI_COMPOSITE)


@dataclass(frozen=True)
class LinkChannels:
    """The three channels seen by the FD node in one trial."""

    h_ki: ChannelMatrix
    h_ij: ChannelMatrix
    h_ii: ChannelMatrix


@dataclass(frozen=True)
class ChannelScenario:
    nt: int = 16
    nr: int = 16
    kappa_db: float = 30.0
    desired: ClusteredChannelParams = field(default_factory=ClusteredChannelParams)
    si_nlos: ClusteredChannelParams = SI_NLOS_PARAMS
    si_geometry: SiGeometry = None

    def __post_init__(self):
        if self.si_geometry is None:
            object.__setattr__(self, "si_geometry", SiGeometry(self.nt, self.nr))

    def draw(self, rng):
        """Draw ``H_ki``, ``H_ij`` and ``H_ii`` in that order."""
        h_ki = gen_clustered_channel(self.desired, self.nt, self.nr, rng)
        h_ij = gen_clustered_channel(self.desired, self.nt, self.nr, rng)
        h_ii = gen_si_channel(self.kappa_db, self.si_geometry, self.si_nlos, rng)
        return LinkChannels(h_ki, h_ij, h_ii)
