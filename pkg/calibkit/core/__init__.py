"""
Core numerical components for the Calibration Toolkit
Kernels, designs, quadrature, interpolation and the integral operator
"""
