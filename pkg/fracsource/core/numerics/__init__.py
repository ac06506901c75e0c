from .forward import SpaceTimeField, duhamel_solve, timestep_solve_L1, wave_solve
from .fractional_time import TimeGrid, TimeSignal, caputo_derivative, convolve, rl_integral
from .grid_elliptic import DiscreteOperator, SpatialMesh, assemble_operator, eigensystem
from .inverse import InverseReport, ObservationSpec, reconstruct_h, reconstruct_mu_h
from .solution_operators import OrderField, apply_S_contour, apply_S_spectral
from .special_functions import mittag_leffler, mittag_leffler_array
