"""UHF link budget for backscatter tags.

Forward link (reader -> tag IC):

    P_IC = P_T * G_tag * G_reader * tau * (lambda / (4 pi d))^2

Read range follows by solving for d at the IC wake threshold. The reverse
link is modelled as the forward power re-radiated by the tag (scaled by the
backscatter modulation gain) over the same path back to the reader, giving
the radar-style 1/d^4 law.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from pvtag.errors import DomainError

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0  # m/s
_FOUR_PI = 4.0 * math.pi

REGULATORY_MAX_POWER_W = 1.0
UHF_BAND_HZ = (860e6, 960e6)

DIPOLE_GAIN_DBI = 2.15
PASSIVE_SENSITIVITY_DBM = -9.0
ASSISTED_SENSITIVITY_DBM = -23.0


def dbm_to_watts(p_dbm: float) -> float:
    """Convert dBm to watts."""
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_w: float) -> float:
    """Convert watts to dBm. Only defined for positive power."""
    if not p_w > 0:
        raise DomainError(f"power must be > 0 W to express in dBm (got {p_w} W)")
    return 10.0 * math.log10(p_w / 1e-3)


def db_to_linear(gain_db: float) -> float:
    return 10.0 ** (gain_db / 10.0)


def _power_to_dbm_or_floor(p_w: float) -> float:
    # zero power has no dBm value; report -inf instead of raising
    return watts_to_dbm(p_w) if p_w > 0 else -math.inf


@dataclass(frozen=True)
class ReaderProfile:
    transmit_power: float  # W
    antenna_gain_dbi: float = 8.5
    carrier_frequency: float = 915e6  # Hz
    allow_over_limit: bool = False
    allow_out_of_band: bool = False

    def __post_init__(self) -> None:
        if not self.transmit_power > 0:
            raise DomainError(f"reader transmit_power must be > 0 W (got {self.transmit_power} W)")
        if self.transmit_power > REGULATORY_MAX_POWER_W and not self.allow_over_limit:
            raise DomainError(
                f"reader transmit_power {self.transmit_power} W exceeds the "
                f"{REGULATORY_MAX_POWER_W} W regulatory cap (set allow_over_limit to exceed it)"
            )
        lo, hi = UHF_BAND_HZ
        if not self.carrier_frequency > 0:
            raise DomainError(f"carrier_frequency must be > 0 Hz (got {self.carrier_frequency} Hz)")
        if not (lo <= self.carrier_frequency <= hi) and not self.allow_out_of_band:
            raise DomainError(
                f"carrier_frequency {self.carrier_frequency / 1e6:.3f} MHz is outside "
                f"the UHF RFID band [{lo / 1e6:.0f}, {hi / 1e6:.0f}] MHz"
            )

    @property
    def antenna_gain(self) -> float:
        return db_to_linear(self.antenna_gain_dbi)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def transmit_power_dbm(self) -> float:
        return watts_to_dbm(self.transmit_power)


@dataclass(frozen=True)
class TagRfProfile:
    antenna_gain_dbi: float = DIPOLE_GAIN_DBI
    transmission_coefficient: float = 1.0
    passive_sensitivity: float = dbm_to_watts(PASSIVE_SENSITIVITY_DBM)  # W
    assisted_sensitivity: float = dbm_to_watts(ASSISTED_SENSITIVITY_DBM)  # W

    def __post_init__(self) -> None:
        if not 0.0 <= self.transmission_coefficient <= 1.0:
            raise DomainError(
                f"transmission_coefficient must be in [0, 1] (got {self.transmission_coefficient})"
            )
        if not self.passive_sensitivity > 0 or not self.assisted_sensitivity > 0:
            raise DomainError("IC sensitivities must be > 0 W")
        if self.assisted_sensitivity > self.passive_sensitivity:
            raise DomainError(
                "assisted_sensitivity must not exceed passive_sensitivity "
                f"({watts_to_dbm(self.assisted_sensitivity):.2f} dBm > "
                f"{watts_to_dbm(self.passive_sensitivity):.2f} dBm)"
            )

    @property
    def antenna_gain(self) -> float:
        return db_to_linear(self.antenna_gain_dbi)


@dataclass(frozen=True)
class LinkResult:
    received_power: float  # W
    received_power_dbm: float
    distance: float  # m


def _path_gain(reader: ReaderProfile, distance: float) -> float:
    if not distance > 0:
        raise DomainError(f"distance must be > 0 m (got {distance} m)")
    return (reader.wavelength / (_FOUR_PI * distance)) ** 2


def free_space_path_loss_db(distance: float, carrier_frequency: float) -> float:
    """FSPL in dB: 20 log10(4 pi d f / c)."""
    if not distance > 0 or not carrier_frequency > 0:
        raise DomainError("distance and frequency must be positive")
    return 20.0 * math.log10(_FOUR_PI * distance * carrier_frequency / SPEED_OF_LIGHT)


def forward_link_power(reader: ReaderProfile, tag: TagRfProfile, distance: float) -> LinkResult:
    """Power reaching the tag IC at ``distance`` metres."""
    p = (
        reader.transmit_power
        * tag.antenna_gain
        * reader.antenna_gain
        * tag.transmission_coefficient
        * _path_gain(reader, distance)
    )
    return LinkResult(received_power=p, received_power_dbm=_power_to_dbm_or_floor(p), distance=distance)


def max_read_range(reader: ReaderProfile, tag: TagRfProfile, min_ic_power: float) -> float:
    """Largest distance at which the IC still receives ``min_ic_power`` watts.

    Returns 0.0 when the tag cannot be reached at any distance (tau = 0).
    """
    if not min_ic_power > 0:
        raise DomainError(f"min_ic_power must be > 0 W (got {min_ic_power} W)")
    budget = reader.transmit_power * tag.antenna_gain * reader.antenna_gain * tag.transmission_coefficient
    if budget == 0.0:
        logger.info("tag unreachable: zero transmission coefficient")
        return 0.0
    return reader.wavelength / _FOUR_PI * math.sqrt(budget / min_ic_power)


def reverse_link_rssi(
    reader: ReaderProfile,
    tag: TagRfProfile,
    distance: float,
    backscatter_gain: float = 1.0,
) -> float:
    """Reader-side power of the tag reply in dBm.

    P_T * (G_r G_t)^2 * tau^2 * (lambda / 4 pi d)^4 * backscatter_gain
    """
    if not 0.0 < backscatter_gain <= 1.0:
        raise DomainError(f"backscatter_gain must be in (0, 1] (got {backscatter_gain})")
    incident = forward_link_power(reader, tag, distance).received_power
    returned = (
        incident
        * backscatter_gain
        * tag.antenna_gain
        * reader.antenna_gain
        * tag.transmission_coefficient
        * _path_gain(reader, distance)
    )
    return _power_to_dbm_or_floor(returned)
