"""Indoor optical downlink and RF uplink channel models.

The downlink is a line-of-sight Lambertian link between a ceiling LED and a
photodiode facing straight up; the uplink is a narrowband RF link with
distance path loss and unit-mean exponential small-scale fading. Geometry is
a rectangular room with the LED on the ceiling, users on a horizontal plane,
and a wall-mounted RF receiver.

All angles at this interface are in degrees; they are converted to radians
internally. Distances are metres, powers watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RoomGeometry",
    "OpticalFrontend",
    "UserDrop",
    "ChannelRealization",
    "lambertian_order",
    "concentrator_gain",
    "vlc_gain",
    "rf_power_gain",
    "place_users_uniform",
    "realize_channels",
]


@dataclass(frozen=True)
class RoomGeometry:
    """Rectangular room with LED, RF receiver and user-plane height."""

    length: float = 5.0                       # m, x extent
    width: float = 5.0                        # m, y extent
    height: float = 3.0                       # m, z extent
    led_position: tuple = (2.5, 2.5, 3.0)     # on the ceiling
    rf_receiver_position: tuple = (4.0, 1.0, 1.0)
    user_height: float = 1.0                  # receiver plane

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0.0:
            raise ValueError("room dimensions must be positive")
        if not 0.0 <= self.user_height < self.height:
            raise ValueError("user plane must sit inside the room")
        for name, pos in (("led", self.led_position), ("rf receiver", self.rf_receiver_position)):
            x, y, z = pos
            if not (0.0 <= x <= self.length and 0.0 <= y <= self.width and 0.0 <= z <= self.height):
                raise ValueError(f"{name} position outside the room")

    @property
    def vertical_drop(self) -> float:
        """Height of the LED above the user plane."""
        return self.led_position[2] - self.user_height


@dataclass(frozen=True)
class OpticalFrontend:
    """Photodiode front end and LED beam shape."""

    detector_area: float = 1e-4        # m^2
    responsivity: float = 0.53         # A/W
    semi_angle_deg: float = 60.0       # LED half-intensity semi-angle
    fov_deg: float = 60.0              # concentrator field of view
    filter_gain: float = 1.0
    refractive_index: float = 1.5
    conversion_efficiency: float = 1.0  # electrical-to-optical scaling

    def __post_init__(self):
        if not 0.0 < self.semi_angle_deg < 90.0:
            raise ValueError("semi-angle must lie in (0, 90) degrees")
        if not 0.0 < self.fov_deg <= 90.0:
            raise ValueError("field of view must lie in (0, 90] degrees")
        if self.detector_area <= 0.0 or self.responsivity <= 0.0:
            raise ValueError("detector area and responsivity must be positive")
        if self.refractive_index < 1.0:
            raise ValueError("refractive index below 1")
        if not 0.0 < self.filter_gain <= 1.0 or not 0.0 < self.conversion_efficiency <= 1.0:
            raise ValueError("filter gain and conversion efficiency must lie in (0, 1]")

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.semi_angle_deg)


@dataclass(frozen=True)
class UserDrop:
    """One random placement of K users on the user plane (positions Kx2, metres)."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be Kx2")
        object.__setattr__(self, "positions", pos)

    @property
    def user_count(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user channel draws for one drop."""

    vlc_gain: np.ndarray       # dimensionless optical current gain, g_k
    rf_power_gain: np.ndarray  # |h_k|^2 including path loss

    def __post_init__(self):
        g = np.asarray(self.vlc_gain, dtype=float)
        h2 = np.asarray(self.rf_power_gain, dtype=float)
        if g.shape != h2.shape:
            raise ValueError("gain arrays must have matching shape")
        if np.any(g < 0.0) or np.any(h2 < 0.0):
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "vlc_gain", g)
        object.__setattr__(self, "rf_power_gain", h2)


def lambertian_order(semi_angle_deg: float) -> float:
    """Lambertian mode number m = -1 / log2(cos(semi-angle)).

    The semi-angle is the half-intensity angle of the LED in degrees and must
    lie strictly inside (0, 90); at 90 the cosine vanishes and m is undefined.
    """
    if not 0.0 < semi_angle_deg < 90.0:
        raise ValueError("semi-angle must lie in (0, 90) degrees")
    c = math.cos(math.radians(semi_angle_deg))
    return -1.0 / math.log2(c)


def concentrator_gain(incidence_deg: float, refractive_index: float, fov_deg: float) -> float:
    """Non-imaging concentrator gain: n^2 / sin^2(fov) inside the FOV, else 0."""
    if not 0.0 < fov_deg <= 90.0:
        raise ValueError("field of view must lie in (0, 90] degrees")
    if incidence_deg < 0.0:
        raise ValueError("incidence angle must be nonnegative")
    if incidence_deg > fov_deg:
        return 0.0
    s = math.sin(math.radians(fov_deg))
    return refractive_index ** 2 / (s * s)


def vlc_gain(user_xy, room: RoomGeometry, frontend: OpticalFrontend):
    """Line-of-sight optical channel gain for users at the given xy positions.

    The photodiode faces the ceiling, so the irradiance and incidence angles
    coincide: cos(phi) = L / d with L the LED height above the user plane and
    d the LED-user distance. Users outside the field of view get exactly 0.

    Accepts a single (x, y) pair or an Nx2 array; returns a float or an array.
    """
    xy = np.atleast_2d(np.asarray(user_xy, dtype=float))
    led_xy = np.asarray(room.led_position[:2], dtype=float)
    vertical = room.vertical_drop
    if vertical <= 0.0:
        raise ValueError("LED must sit above the user plane")
    r2 = np.sum((xy - led_xy) ** 2, axis=1)
    d2 = vertical * vertical + r2
    cos_phi = vertical / np.sqrt(d2)
    m = frontend.lambertian_order
    t_f = concentrator_gain(0.0, frontend.refractive_index, frontend.fov_deg)
    gain = (
        (m + 1.0)
        * frontend.detector_area
        * frontend.responsivity
        / (2.0 * math.pi * d2)
        * np.power(cos_phi, m)
        * frontend.filter_gain
        * t_f
        * cos_phi
    )
    # FOV cut: incidence angle phi = arccos(cos_phi) must not exceed the FOV
    cos_fov = math.cos(math.radians(frontend.fov_deg))
    gain = np.where(cos_phi >= cos_fov - 1e-15, gain, 0.0)
    if np.asarray(user_xy).ndim == 1:
        return float(gain[0])
    return gain


def rf_power_gain(user_xy, room: RoomGeometry, path_loss_exponent: float, rng, fading=None):
    """Uplink RF power gain |h|^2: unit-mean exponential fading times d^-alpha.

    d is the 3-D distance from the user (at the user-plane height) to the RF
    receiver. `fading` may carry pre-drawn unit-mean exponential samples; when
    None they are drawn from `rng`.
    """
    if path_loss_exponent < 0.0:
        raise ValueError("path loss exponent must be nonnegative")
    xy = np.atleast_2d(np.asarray(user_xy, dtype=float))
    user_pos = np.column_stack([xy, np.full(xy.shape[0], room.user_height)])
    rx = np.asarray(room.rf_receiver_position, dtype=float)
    d = np.linalg.norm(user_pos - rx, axis=1)
    if np.any(d <= 0.0):
        raise ValueError("user coincides with the RF receiver")
    if fading is None:
        fading = rng.exponential(1.0, size=xy.shape[0])
    fading = np.asarray(fading, dtype=float)
    gain = fading * np.power(d, -path_loss_exponent)
    if np.asarray(user_xy).ndim == 1:
        return float(gain[0])
    return gain


def place_users_uniform(user_count: int, room: RoomGeometry, rng) -> UserDrop:
    """Drop users uniformly over the room footprint."""
    if user_count < 1:
        raise ValueError("need at least one user")
    xs = rng.uniform(0.0, room.length, size=user_count)
    ys = rng.uniform(0.0, room.width, size=user_count)
    return UserDrop(positions=np.column_stack([xs, ys]))


def realize_channels(
    drop: UserDrop,
    room: RoomGeometry,
    frontend: OpticalFrontend,
    path_loss_exponent: float,
    rng,
    fading=None,
) -> ChannelRealization:
    """Bundle optical and RF gains for one drop."""
    g = vlc_gain(drop.positions, room, frontend)
    h2 = rf_power_gain(drop.positions, room, path_loss_exponent, rng, fading=fading)
    return ChannelRealization(vlc_gain=np.asarray(g), rf_power_gain=np.asarray(h2))
