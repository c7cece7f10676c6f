"""
Simulation of pulsed Mollow absorption spectroscopy on a driven two-level system.

Modules
-------
spincore     two-level propagators and states
frames       signal-frame generators for the weak signal and the drive
sequences    pulse-program builders, validation and text format
simulate     time-domain propagation of a pulse program
sensitivity  linear-response (sensitivity function) model
dephasing    quasi-static inhomogeneous broadening
experiments  scans, maps, Rabi traces and linewidth sweeps
cli          command-line front end
"""

__version__ = "0.1.0"
