"""Instantaneous-eigenbasis frame for closed-system annealing runs."""
from opendyn.adiabatic.frame import AdiabaticFrameHamiltonian, solve_in_adiabatic_frame, to_adiabatic_frame
