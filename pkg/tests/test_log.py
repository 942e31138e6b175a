"""Unit tests for raman_qubit.core.log."""

import math

import pytest
import structlog

from raman_qubit.core.log import configure_default_logging
from raman_qubit.services.drive import RamanPulse
from raman_qubit.services.experiments import ExperimentConfig, rabi_sweep
from raman_qubit.services.system_model import DipoleSet, LevelKind, LevelSystem


@pytest.fixture
def fresh_structlog():
    structlog.reset_defaults()
    yield
    structlog.reset_defaults()
    configure_default_logging()


class TestDefaultLogging:
    """Library events before any application sets up logging."""

    def test_configured_on_import(self):
        """Test importing the package leaves structlog configured."""
        import raman_qubit  # noqa: F401

        assert structlog.is_configured()

    def test_events_go_to_stderr(self, fresh_structlog, capsys):
        """Test the default logger writes to stderr and never to stdout."""
        configure_default_logging()
        structlog.get_logger("raman_qubit.test").info("sweep_started", points=3)
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "sweep_started" in captured.err

    def test_keeps_existing_configuration(self, fresh_structlog):
        """Test an application's own configuration is not replaced."""
        processors = [structlog.processors.KeyValueRenderer()]
        structlog.configure(processors=processors)
        configure_default_logging()
        assert structlog.get_config()["processors"] == processors

    def test_sweep_leaves_stdout_clean(self, capsys):
        """Test a library sweep run without configure_logging prints nothing on stdout."""
        cfg = ExperimentConfig(
            system=LevelSystem(kind=LevelKind.TWO_LEVEL_EFFECTIVE),
            dipoles=DipoleSet(mu2=1.0),
            base_pulse=RamanPulse.pair(fwhm_ps=2.0, pump_area_rad=3.0, stokes_area_rad=3.0),
        )
        table = rabi_sweep(cfg, [0.0, math.pi])
        assert table.shape == (2,)
        assert capsys.readouterr().out == ""
