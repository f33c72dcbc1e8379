"""
Calibration Toolkit (calibkit)
Frequentist calibration of deterministic computer models
"""

__version__ = "1.0.0"
TOOL_NAME = "calibkit"
