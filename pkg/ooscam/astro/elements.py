"""Orbital element and state-vector types with the conversions between them."""
from dataclasses import dataclass, replace
import math

import numpy as np

from ooscam.astro.constants import EARTH, TWO_PI, CentralBody
from ooscam.astro.epoch import Epoch

# Below these values the node line / periapsis direction is undefined.
DEGENERATE_INCLINATION = 1e-11
DEGENERATE_ECCENTRICITY = 1e-11


class InvalidElements(ValueError):
    """Raised when an element set violates a >0, 0 <= e < 1 or has non-finite values."""
    pass


class UnsupportedOrbit(ValueError):
    """Raised when a state vector describes a parabolic or hyperbolic orbit."""
    pass


def normalize_angle(angle: float) -> float:
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod of a tiny negative number can round back up to 2*pi
    return 0.0 if wrapped >= TWO_PI else wrapped


def angle_difference(a: float, b: float) -> float:
    """Smallest absolute difference between two angles, in [0, pi]."""
    d = normalize_angle(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class KeplerianElements:
    """
    Classical elements of an elliptic orbit.
    Distances in km, angles in rad; angles are normalized to [0, 2*pi) on construction.
    """

    a: float
    e: float
    i: float
    raan: float
    argp: float
    true_anom: float
    epoch: Epoch

    def __post_init__(self):
        values = (self.a, self.e, self.i, self.raan, self.argp, self.true_anom)
        if not all(math.isfinite(v) for v in values):
            raise InvalidElements(f"Non-finite orbital element in {values}")
        if self.a <= 0:
            raise InvalidElements(f"Semi-major axis must be positive, got {self.a}")
        if not 0.0 <= self.e < 1.0:
            raise InvalidElements(f"Only elliptic orbits are supported, got e={self.e}")
        for name in ("i", "raan", "argp", "true_anom"):
            object.__setattr__(self, name, normalize_angle(getattr(self, name)))

    @classmethod
    def from_degrees(cls, a: float, e: float, i: float, raan: float, argp: float, true_anom: float,
                     epoch: Epoch) -> "KeplerianElements":
        return cls(a, e, math.radians(i), math.radians(raan), math.radians(argp), math.radians(true_anom), epoch)

    def canonical(self) -> "KeplerianElements":
        """
        Returns the equivalent element set with inclination in [0, pi].
        An inclination i > pi describes the same orbit as 2*pi - i with the node
        and periapsis angles shifted by pi.
        """
        if self.i <= math.pi:
            return self
        return replace(self, i=TWO_PI - self.i, raan=self.raan + math.pi, argp=self.argp + math.pi)

    def with_true_anomaly(self, true_anom: float, epoch: Epoch) -> "KeplerianElements":
        return replace(self, true_anom=true_anom, epoch=epoch)

    def as_dict(self) -> dict:
        return {
            "a_km": self.a,
            "e": self.e,
            "i_rad": self.i,
            "raan_rad": self.raan,
            "argp_rad": self.argp,
            "true_anom_rad": self.true_anom,
            "epoch_mjd2000": self.epoch.mjd2000,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeplerianElements":
        return cls(
            a=float(data["a_km"]),
            e=float(data["e"]),
            i=float(data["i_rad"]),
            raan=float(data["raan_rad"]),
            argp=float(data["argp_rad"]),
            true_anom=float(data["true_anom_rad"]),
            epoch=Epoch(float(data["epoch_mjd2000"])),
        )


@dataclass(frozen=True, eq=False)
class CartesianState:
    """Inertial position [km] and velocity [km/s] at an epoch."""

    r: np.ndarray
    v: np.ndarray
    epoch: Epoch

    def __post_init__(self):
        for name in ("r", "v"):
            vec = np.array(getattr(self, name), dtype=float).reshape(3)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    def energy(self, body: CentralBody = EARTH) -> float:
        return float(self.v @ self.v) / 2.0 - body.mu / float(np.linalg.norm(self.r))

    def angular_momentum(self) -> np.ndarray:
        return np.cross(self.r, self.v)


def perifocal_rotation(el: KeplerianElements) -> np.ndarray:
    """Matrix whose columns are the inertial periapsis, in-plane normal and orbit normal directions."""
    cO, sO = math.cos(el.raan), math.sin(el.raan)
    cw, sw = math.cos(el.argp), math.sin(el.argp)
    ci, si = math.cos(el.i), math.sin(el.i)
    return np.array([
        [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
        [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
        [sw * si, cw * si, ci],
    ])


def state_vectors(el: KeplerianElements, true_anom, body: CentralBody = EARTH):
    """
    Position and velocity on the orbit of `el` at one or many true anomalies.
    Returns arrays shaped (3,) for a scalar anomaly or (N, 3) for an array.
    """
    nu = np.asarray(true_anom, dtype=float)
    p = el.a * (1.0 - el.e ** 2)
    cos_nu, sin_nu = np.cos(nu), np.sin(nu)
    radius = p / (1.0 + el.e * cos_nu)
    speed = math.sqrt(body.mu / p)
    zeros = np.zeros_like(nu)
    r_pf = np.stack([radius * cos_nu, radius * sin_nu, zeros], axis=-1)
    v_pf = np.stack([-speed * sin_nu, speed * (el.e + cos_nu), zeros], axis=-1)
    rot = perifocal_rotation(el)
    return r_pf @ rot.T, v_pf @ rot.T


def elements_to_state(el: KeplerianElements, body: CentralBody = EARTH) -> CartesianState:
    r, v = state_vectors(el, el.true_anom, body)
    return CartesianState(r, v, el.epoch)


def state_to_elements(st: CartesianState, body: CentralBody = EARTH) -> KeplerianElements:
    """
    Recovers classical elements from an elliptic state.

    Degenerate conventions: an equatorial orbit gets raan = 0 (node line along x),
    a circular orbit gets argp = 0 and the true anomaly becomes the argument of
    latitude. The inclination is always returned in [0, pi].
    """
    r, v = st.r, st.v
    r_norm = float(np.linalg.norm(r))
    v_sq = float(v @ v)
    energy = v_sq / 2.0 - body.mu / r_norm
    if not energy < 0.0:
        raise UnsupportedOrbit(f"State at {st.epoch} is not elliptic (specific energy {energy:.6e} km^2/s^2)")

    h = np.cross(r, v)
    h_norm = float(np.linalg.norm(h))
    if h_norm == 0.0:
        raise UnsupportedOrbit(f"State at {st.epoch} is rectilinear (zero angular momentum)")
    h_hat = h / h_norm

    a = -body.mu / (2.0 * energy)
    e_vec = ((v_sq - body.mu / r_norm) * r - float(r @ v) * v) / body.mu
    e = float(np.linalg.norm(e_vec))
    i = math.acos(max(-1.0, min(1.0, h_hat[2])))

    node = np.array([-h[1], h[0], 0.0])
    node_norm = float(np.linalg.norm(node))
    if node_norm / h_norm < DEGENERATE_INCLINATION:
        raan = 0.0
        p_hat = np.array([1.0, 0.0, 0.0])
    else:
        p_hat = node / node_norm
        raan = math.atan2(p_hat[1], p_hat[0])
    q_hat = np.cross(h_hat, p_hat)

    if e < DEGENERATE_ECCENTRICITY:
        argp = 0.0
        true_anom = math.atan2(float(r @ q_hat), float(r @ p_hat))
    else:
        argp = math.atan2(float(e_vec @ q_hat), float(e_vec @ p_hat))
        e_hat = e_vec / e
        true_anom = math.atan2(float(r @ np.cross(h_hat, e_hat)), float(r @ e_hat))

    return KeplerianElements(a, e, i, raan, argp, true_anom, st.epoch)
