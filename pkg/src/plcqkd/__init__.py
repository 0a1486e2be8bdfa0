"""Simulator of a uni-directional time-bin phase-coding QKD link built from
planar-lightwave-circuit Mach-Zehnder interferometers."""

from . import devices, linksim, optics, qkd
from .devices import (BAR, CROSS, DetectorSpec, FibreSpec, MziSpec, SourceSpec,
                      SwitchMode, SwitchSetting, ThermalSpec, split)
from .linksim import LinkConfig, ScanRow, SlotProbabilities, ideal_config
from .optics import ModeIndex, ModeState
from .qkd import Basis, PulseRecord, SiftedKey

__version__ = "0.1.0"
