"""Drive, level models, master-equation integration, experiments, fitting and calibration."""
