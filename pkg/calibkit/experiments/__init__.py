"""
Built-in experiments for the Calibration Toolkit
"""
