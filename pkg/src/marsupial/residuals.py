"""Residual terms of the trajectory cost.

Scalar helpers document one timestep; the ``*_vec`` forms are what the
solver evaluates, vectorised over all timesteps (and over finite-difference
probes stacked along extra leading axes).
"""
from __future__ import annotations

import math

import numpy as np

DEGENERATE_SEGMENT = 1e-6
# below this segment length the turn penalty fades linearly into the floor
# value, so the residual stays continuous as a waypoint leaves a stack
SMOOTHNESS_RAMP = 0.05


def residual_equidistance(p_i, p_next, rho_e: float) -> float:
    return float(np.linalg.norm(np.subtract(p_next, p_i))) - rho_e


def residual_obstacle(d: float, rho_o: float) -> float:
    """Hinge on the clearance ``d``; exactly zero at and beyond ``rho_o``."""
    return rho_o - d if d < rho_o else 0.0


def tether_weights(d, rho_ot: float, beta: float):
    return np.where(np.asarray(d) > rho_ot, 1.0, beta)


def residual_tether_obstacle(sample_distances, rho_ot: float, beta: float, d_min: float = 1e-3) -> float:
    d = np.asarray(sample_distances, dtype=float)
    return float(np.sum(tether_weights(d, rho_ot, beta) / np.maximum(d, d_min)))


def residual_traversability(d_trav: float, rho_trav: float) -> float:
    return d_trav - rho_trav if d_trav > rho_trav else 0.0


def turn_angle(p_prev, p, p_next) -> float:
    a = np.subtract(p, p_prev)
    b = np.subtract(p_next, p)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < DEGENERATE_SEGMENT or nb < DEGENERATE_SEGMENT:
        return 0.0
    return math.acos(max(-1.0, min(1.0, float(a @ b) / (na * nb))))


def _ramp(shortest):
    return np.clip((shortest - DEGENERATE_SEGMENT) / SMOOTHNESS_RAMP, 0.0, 1.0)


def residual_smoothness(p_prev, p, p_next, rho_s: float) -> float:
    theta = turn_angle(p_prev, p, p_next)
    floor = 1.0 - math.cos(rho_s)
    raw = 1.0 - math.cos(theta) if abs(theta) > rho_s else floor
    shortest = min(np.linalg.norm(np.subtract(p, p_prev)), np.linalg.norm(np.subtract(p_next, p)))
    return float(floor + (raw - floor) * _ramp(shortest))


def residual_velocity(p_i, p_next, dt_next: float, rho_v: float) -> float:
    if dt_next <= 0:
        raise ValueError("dt must be positive")
    return float(np.linalg.norm(np.subtract(p_next, p_i))) / dt_next - rho_v


def residual_acceleration(v_prev: float, v_i: float, dt_i: float, dt_next: float) -> float:
    if dt_i + dt_next <= 0:
        raise ValueError("dt sum must be positive")
    return (v_i - v_prev) / (dt_i + dt_next)


def residual_tether_length(d_u: float, length: float) -> float:
    return math.exp(d_u - length) - 1.0 if d_u > length else 0.0


def tether_length_gradient(p_g, p_a, length: float, attach_z: float = 0.5) -> np.ndarray:
    """Gradient of :func:`residual_tether_length` over ``[p_g, p_a, length]``.

    ``d_u`` is measured from the attachment point ``attach_z`` above ``p_g``.
    """
    diff = np.subtract(p_a, p_g) - np.array([0.0, 0.0, attach_z])
    d_u = float(np.linalg.norm(diff))
    if d_u <= length:
        return np.zeros(7)
    e = math.exp(d_u - length)
    u = diff / d_u
    return np.concatenate([-e * u, e * u, [-e]])


def cauchy(sq, scale: float = 1.0):
    """Cauchy loss of a squared norm: s^2 log(1 + sq / s^2)."""
    s2 = scale * scale
    return s2 * np.log1p(np.asarray(sq) / s2)


def cauchy_weight(sq, scale: float = 1.0):
    """Derivative of :func:`cauchy` with respect to the squared norm."""
    return 1.0 / (1.0 + np.asarray(sq) / (scale * scale))


def robust_cost(delta, gamma: float, scale: float = 1.0) -> float:
    sq = float(np.sum(np.square(delta)))
    return float(gamma * cauchy(sq, scale))


# --- vectorised forms ------------------------------------------------------

def smoothness_vec(p_prev, p, p_next, rho_s: float):
    a = p - p_prev
    b = p_next - p
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    degenerate = (na < DEGENERATE_SEGMENT) | (nb < DEGENERATE_SEGMENT)
    denom = np.where(degenerate, 1.0, na * nb)
    cos = np.clip(np.sum(a * b, axis=-1) / denom, -1.0, 1.0)
    theta = np.arccos(cos)
    floor = 1.0 - math.cos(rho_s)
    raw = np.where(~degenerate & (theta > rho_s), 1.0 - cos, floor)
    return floor + (raw - floor) * _ramp(np.minimum(na, nb))


def hinge_below(d, rho):
    return np.where(d < rho, rho - d, 0.0)


def hinge_above(d, rho):
    return np.where(d > rho, d - rho, 0.0)


def tether_obstacle_vec(sample_distances, rho_ot: float, beta: float, d_min: float):
    d = np.asarray(sample_distances)
    return np.sum(tether_weights(d, rho_ot, beta) / np.maximum(d, d_min), axis=-1)
