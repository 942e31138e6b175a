"""Simulator and pulse calibration toolkit for phase-controlled Raman rotation of a hole orbital qubit."""

from raman_qubit.core.log import configure_default_logging

__version__ = "0.1.0"

configure_default_logging()
