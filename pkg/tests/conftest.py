from __future__ import annotations

import pytest

from pvtag.physics.harvester import IlluminationEnv, PvCellSpec, PvModuleSpec
from pvtag.physics.rf_link import ReaderProfile, TagRfProfile
from tests.utils import CALIBRATED_TAU


@pytest.fixture
def reader() -> ReaderProfile:
    return ReaderProfile(transmit_power=1.0, antenna_gain_dbi=8.5, carrier_frequency=915e6)


@pytest.fixture
def tag_rf() -> TagRfProfile:
    return TagRfProfile()


@pytest.fixture
def calibrated_rf() -> TagRfProfile:
    return TagRfProfile(transmission_coefficient=CALIBRATED_TAU)


@pytest.fixture
def indoor() -> IlluminationEnv:
    return IlluminationEnv.for_class("indoor_lit")


@pytest.fixture
def outdoor() -> IlluminationEnv:
    return IlluminationEnv.for_class("outdoor_sun")


@pytest.fixture
def one_cm2_module() -> PvModuleSpec:
    return PvModuleSpec(cell=PvCellSpec(efficiency=0.13, vmpp=0.88, active_area=1.0))
