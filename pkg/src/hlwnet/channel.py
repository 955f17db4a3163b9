"""LiFi/WiFi channel gains, SNR and link capacity.

LiFi uses the Lambertian line-of-sight model with an optional one-bounce
wall reflection sum; WiFi uses a dual-slope log-distance path loss.
"""

from dataclasses import dataclass

import numpy as np

from .scenario import LIFI, WIFI
from .seeding import as_rng

SPEED_OF_LIGHT = 299_792_458.0
SNR_DB_FLOOR = -50.0


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class LiFiFrontEnd:
    half_power_semiangle: float = 60.0  # degrees
    pd_area: float = 1e-4  # m^2
    fov: float = 90.0  # degrees
    optical_filter_gain: float = 1.0
    concentrator_index: float = 1.5
    responsivity: float = 0.53  # A/W
    noise_psd: float = 1e-21  # A^2/Hz
    bandwidth: float = 20e6
    optical_power: float = 3.0  # W
    wall_reflectivity: float = 0.8
    nlos_enabled: bool = False

    def __post_init__(self):
        if not 0 < self.half_power_semiangle < 90:
            raise ValueError("half-power semiangle must be in (0, 90) degrees")
        if not 0 < self.fov <= 90:
            raise ValueError("FOV must be in (0, 90] degrees")
        for name in ("pd_area", "optical_filter_gain", "concentrator_index",
                     "responsivity", "noise_psd", "bandwidth", "optical_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.wall_reflectivity < 0:
            raise ValueError("wall_reflectivity must be non-negative")

    @property
    def lambertian_order(self):
        return -np.log(2.0) / np.log(np.cos(np.radians(self.half_power_semiangle)))

    @property
    def concentrator_gain(self):
        return self.concentrator_index ** 2 / np.sin(np.radians(self.fov)) ** 2


@dataclass(frozen=True)
class WiFiFrontEnd:
    tx_power: float = 20.0  # dBm
    carrier_freq: float = 2.4e9
    breakpoint: float = 3.0  # m
    exponent_before: float = 2.0
    exponent_after: float = 3.5
    noise_psd: float = -174.0  # dBm/Hz
    noise_figure: float = 10.0  # dB
    bandwidth: float = 20e6
    shadowing_sigma: float = 0.0  # dB
    reference_distance: float = 1.0  # m

    def __post_init__(self):
        if self.breakpoint <= 0:
            raise ValueError("breakpoint must be positive")
        if self.exponent_before < 2 or self.exponent_after < 2:
            raise ValueError("path-loss exponents must be >= 2")
        if self.bandwidth <= 0 or self.reference_distance <= 0:
            raise ValueError("bandwidth and reference distance must be positive")


@dataclass
class SnrMatrix:
    """Linear SNR, one row per AP and one column per user."""

    values: np.ndarray

    @property
    def db(self):
        with np.errstate(divide="ignore"):
            out = 10.0 * np.log10(self.values)
        return np.maximum(out, SNR_DB_FLOOR)

    @property
    def shape(self):
        return self.values.shape


def _positions(users):
    if isinstance(users, np.ndarray):
        return np.atleast_2d(users).astype(float)
    return np.array([u.position for u in users], dtype=float)


def los_gain_array(ap_pos, rx_pos, fe):
    """Vectorised LoS DC gain from one ceiling AP to many upward-facing receivers."""
    ap_pos = np.asarray(ap_pos, dtype=float)
    diff = ap_pos - np.atleast_2d(rx_pos)
    d2 = np.einsum("ij,ij->i", diff, diff)
    if np.any(d2 == 0.0):
        raise DegenerateGeometryError("receiver coincides with the LiFi AP")
    d = np.sqrt(d2)
    # AP points straight down and receivers straight up, so the
    # irradiance and incidence angles coincide.
    cos_t = np.clip(diff[:, 2] / d, 0.0, 1.0)
    m = fe.lambertian_order
    inside = cos_t >= np.cos(np.radians(fe.fov)) - 1e-15
    h = ((m + 1) * fe.pd_area / (2 * np.pi * d2) * cos_t ** m
         * fe.optical_filter_gain * fe.concentrator_gain * cos_t)
    return np.where(inside & (cos_t > 0), h, 0.0)


def lifi_los_gain(ap, user, fe):
    if ap.kind != LIFI:
        raise ValueError("LoS gain is defined for LiFi APs only")
    pos = user.position if hasattr(user, "position") else user
    return float(los_gain_array(ap.position, np.asarray(pos, dtype=float), fe)[0])


def _wall_elements(side, height, partition):
    """Centres, inward normals and area of a partition x partition grid on each wall."""
    s = (np.arange(partition) + 0.5) * side / partition
    z = (np.arange(partition) + 0.5) * height / partition
    S, Z = np.meshgrid(s, z, indexing="ij")
    S, Z = S.ravel(), Z.ravel()
    zeros, full = np.zeros_like(S), np.full_like(S, side)
    walls = [
        (np.column_stack([zeros, S, Z]), (1.0, 0.0, 0.0)),
        (np.column_stack([full, S, Z]), (-1.0, 0.0, 0.0)),
        (np.column_stack([S, zeros, Z]), (0.0, 1.0, 0.0)),
        (np.column_stack([S, full, Z]), (0.0, -1.0, 0.0)),
    ]
    centres = np.vstack([w[0] for w in walls])
    normals = np.vstack([np.tile(w[1], (len(S), 1)) for w in walls])
    return centres, normals, (side / partition) * (height / partition)


def nlos_gain_array(ap_pos, rx_pos, fe, side, height, wall_partition=20):
    """First-order wall-reflection gain, summed over discretised wall elements."""
    rx = np.atleast_2d(np.asarray(rx_pos, dtype=float))
    if fe.wall_reflectivity == 0.0:
        return np.zeros(len(rx))
    ap_pos = np.asarray(ap_pos, dtype=float)
    w, nrm, area = _wall_elements(side, height, wall_partition)
    m = fe.lambertian_order

    v1 = w - ap_pos  # AP -> wall
    d1 = np.linalg.norm(v1, axis=1)
    cos_phi = np.clip(-v1[:, 2] / d1, 0.0, None)
    cos_alpha = np.clip(-np.einsum("ij,ij->i", v1, nrm) / d1, 0.0, None)
    first = (m + 1) / (2 * np.pi * d1 ** 2) * cos_phi ** m * cos_alpha * area

    v2 = rx[:, None, :] - w[None, :, :]  # wall -> receiver
    d2 = np.linalg.norm(v2, axis=2)
    cos_beta = np.clip(np.einsum("uej,ej->ue", v2, nrm) / d2, 0.0, None)
    cos_psi = np.clip(-v2[:, :, 2] / d2, 0.0, None)
    inside = cos_psi >= np.cos(np.radians(fe.fov)) - 1e-15
    second = (fe.pd_area / (np.pi * d2 ** 2) * cos_beta * cos_psi
              * fe.optical_filter_gain * fe.concentrator_gain * inside)
    return fe.wall_reflectivity * (second * first[None, :]).sum(axis=1)


def lifi_nlos_gain(ap, user, fe, room, wall_partition=20):
    pos = user.position if hasattr(user, "position") else user
    return float(nlos_gain_array(ap.position, np.asarray(pos, dtype=float), fe,
                                 room.side_length, room.ceiling_height, wall_partition)[0])


def free_space_loss_db(distance, freq):
    return 20.0 * np.log10(4 * np.pi * distance * freq / SPEED_OF_LIGHT)


def wifi_path_loss_array(distance, fe, rng=None):
    """Dual-slope log-distance path loss in dB.

    Distances below the reference distance are evaluated at the reference
    distance (the far-field model is meaningless closer in).
    """
    d = np.maximum(np.asarray(distance, dtype=float), fe.reference_distance)
    d0, bp = fe.reference_distance, fe.breakpoint
    base = free_space_loss_db(d0, fe.carrier_freq)
    near = base + 10 * fe.exponent_before * np.log10(d / d0)
    far = (base + 10 * fe.exponent_before * np.log10(max(bp, d0) / d0)
           + 10 * fe.exponent_after * np.log10(d / max(bp, d0)))
    pl = np.where(d <= bp, near, far)
    if fe.shadowing_sigma > 0:
        pl = pl + as_rng(rng).normal(0.0, fe.shadowing_sigma, size=np.shape(pl))
    return pl


def wifi_path_loss(ap, user, fe, rng_seed=None):
    if ap.kind != WIFI:
        raise ValueError("path loss is defined for the WiFi AP only")
    pos = np.asarray(user.position if hasattr(user, "position") else user, dtype=float)
    d = np.linalg.norm(np.asarray(ap.position) - pos)
    return float(wifi_path_loss_array(d, fe, rng_seed))


def snr(gain, fe):
    """Linear SNR from a channel gain.

    LiFi: ``gain`` is the optical DC gain H.  WiFi: ``gain`` is the linear
    power gain, i.e. ``10**(-PL/10)``.
    """
    gain = np.asarray(gain, dtype=float)
    if isinstance(fe, LiFiFrontEnd):
        return (fe.responsivity * fe.optical_power * gain) ** 2 / (fe.noise_psd * fe.bandwidth)
    p_rx = 10 ** ((fe.tx_power - 30.0) / 10.0) * gain
    noise = 10 ** ((fe.noise_psd + fe.noise_figure - 30.0) / 10.0) * fe.bandwidth
    return p_rx / noise


def link_capacity(kind, bandwidth, gamma):
    gamma = np.asarray(gamma, dtype=float)
    if kind == LIFI:
        return bandwidth / 2.0 * np.log2(1.0 + np.e / (2 * np.pi) * gamma)
    return bandwidth * np.log2(1.0 + gamma)


def build_snr_matrix(aps, users, lifi_fe=None, wifi_fe=None, room=None,
                     rng_seed=None, wall_partition=20):
    lifi_fe = lifi_fe or LiFiFrontEnd()
    wifi_fe = wifi_fe or WiFiFrontEnd()
    pos = _positions(users)
    rng = as_rng(rng_seed)
    out = np.empty((len(aps), len(pos)))
    for i, ap in enumerate(aps):
        if ap.kind == LIFI:
            h = los_gain_array(ap.position, pos, lifi_fe)
            if lifi_fe.nlos_enabled:
                if room is None:
                    raise ValueError("NLoS needs the room geometry")
                h = h + nlos_gain_array(ap.position, pos, lifi_fe, room.side_length,
                                        room.ceiling_height, wall_partition)
            out[i] = snr(h, lifi_fe)
        else:
            d = np.linalg.norm(pos - np.asarray(ap.position), axis=1)
            pl = wifi_path_loss_array(d, wifi_fe, rng)
            out[i] = snr(10 ** (-pl / 10.0), wifi_fe)
    return SnrMatrix(out)


def capacity_matrix(aps, snr_matrix):
    values = snr_matrix.values if isinstance(snr_matrix, SnrMatrix) else np.asarray(snr_matrix)
    out = np.empty_like(values, dtype=float)
    for i, ap in enumerate(aps):
        out[i] = link_capacity(ap.kind, ap.bandwidth, values[i])
    return out


def dump_snr_db(snr_matrix):
    """Text table in dB; row = AP, column = user."""
    db = snr_matrix.db
    head = "# ap\\user\t" + "\t".join(str(j) for j in range(db.shape[1]))
    rows = [f"{i}\t" + "\t".join(f"{v:.3f}" for v in row) for i, row in enumerate(db)]
    return "\n".join([head] + rows) + "\n"
