"""
Calibration estimators for the Calibration Toolkit
"""
