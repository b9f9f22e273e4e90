"""Point-to-point link budget: free-space received power, Shannon rate,
and the energy a node spends pushing one model payload over a link.

All functions work in linear units (watts, hertz, joules). dB and dBm
values appear only at the config boundary; convert them once with the
helpers below and keep everything linear afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LIGHT_SPEED = 3.0e8  # m/s


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError(f"power must be positive to express in dBm, got {watts}")
    return 10.0 * math.log10(watts) + 30.0


def dbi_to_linear(dbi: float) -> float:
    return 10.0 ** (dbi / 10.0)


@dataclass(frozen=True)
class RadioParams:
    """Transmitter-side parameters of one node, in linear units."""

    p_tx: float                   # transmit power, W
    bandwidth: float              # allocated bandwidth, Hz
    g_tx: float = 1.0             # transmit antenna gain, linear
    g_rx: float = 1.0             # receive antenna gain of the peer, linear
    freq: float = 1.0e9           # carrier frequency, Hz
    env_exp: float = 2.0          # path-loss environment exponent, >= 2
    noise_density: float = dbm_to_watts(-174.0)  # thermal floor, W/Hz
    d_max: float = 2000.0         # communication range, m
    light_speed: float = LIGHT_SPEED

    def __post_init__(self):
        if self.p_tx <= 0:
            raise ValueError(f"p_tx must be > 0 W, got {self.p_tx}")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be > 0 Hz, got {self.bandwidth}")
        if self.g_tx <= 0 or self.g_rx <= 0:
            raise ValueError("antenna gains must be positive linear factors")
        if self.freq <= 0:
            raise ValueError(f"freq must be > 0 Hz, got {self.freq}")
        if self.env_exp < 2:
            raise ValueError(f"env_exp must be >= 2, got {self.env_exp}")
        if self.noise_density <= 0:
            raise ValueError("noise_density must be > 0 W/Hz")
        if self.d_max <= 0:
            raise ValueError(f"d_max must be > 0 m, got {self.d_max}")


@dataclass(frozen=True)
class LinkBudget:
    """Full chain for one link at a fixed distance and payload."""

    p_rx: float           # received power, W
    rate: float           # achievable rate, bit/s
    energy: float         # transmit energy for the payload, J
    energy_scaled: float  # energy / range-edge energy, in (0, 1] inside range


def received_power(params: RadioParams, distance: float) -> float:
    """Free-space received power at `distance` meters (W).

    P_rx = P_tx * G_tx * G_rx * (c / 4 pi f)^2 * d^(-n); the d^(-n)
    singularity makes zero distance a domain error.
    """
    if distance <= 0:
        raise ValueError(f"distance must be > 0 m, got {distance}")
    aperture = (params.light_speed / (4.0 * math.pi * params.freq)) ** 2
    return params.p_tx * params.g_tx * params.g_rx * aperture * distance ** (-params.env_exp)


def channel_gain_db(params: RadioParams, distance: float) -> float:
    """Path gain in dB: 10*log10(received power / transmitted power)."""
    return 10.0 * math.log10(received_power(params, distance) / params.p_tx)


def data_rate(params: RadioParams, p_rx: float) -> float:
    """Shannon-Hartley rate B*log2(1 + p_rx / (N0*B)) in bit/s."""
    if p_rx < 0:
        raise ValueError(f"received power must be >= 0 W, got {p_rx}")
    snr = p_rx / (params.noise_density * params.bandwidth)
    return params.bandwidth * math.log1p(snr) / math.log(2.0)


def tx_energy(params: RadioParams, distance: float, payload_bits: int) -> float:
    """Energy (J) to transmit `payload_bits` over `distance` meters.

    Power times airtime: P_tx * S / rate(distance).
    """
    if payload_bits <= 0:
        raise ValueError(f"payload_bits must be > 0, got {payload_bits}")
    rate = data_rate(params, received_power(params, distance))
    return params.p_tx * payload_bits / rate


def max_energy(params: RadioParams, payload_bits: int) -> float:
    """Energy to reach a peer sitting exactly at the range edge d_max."""
    return tx_energy(params, params.d_max, payload_bits)


def scaled_energy(params: RadioParams, distance: float, payload_bits: int) -> float:
    """Transmit energy normalized by the range-edge energy, in (0, 1].

    Defined only inside the communication range; a link beyond d_max
    cannot exist, so asking for its scaled energy is an error.
    """
    if distance > params.d_max:
        raise ValueError(
            f"distance {distance} m exceeds communication range {params.d_max} m"
        )
    return tx_energy(params, distance, payload_bits) / max_energy(params, payload_bits)


def link_budget(params: RadioParams, distance: float, payload_bits: int) -> LinkBudget:
    p_rx = received_power(params, distance)
    rate = data_rate(params, p_rx)
    energy = params.p_tx * payload_bits / rate
    return LinkBudget(
        p_rx=p_rx,
        rate=rate,
        energy=energy,
        energy_scaled=energy / max_energy(params, payload_bits),
    )
