"""vortexlab: numerics for fractional-vortex dynamics of a coupled NLS mixture.

Modules
-------
geometry            domains, grids, and the boundary-matched harmonic F
harmonic_map        stream function, canonical current, phase, annulus energy
renormalized_energy interaction energy W of a vortex configuration and its gradient
reduced_dynamics    Hamiltonian point-vortex ODE integrator
profile_gamma       coupled radial core profiles and the core-energy constant
cnls                split-step solver for the coupled NLS system (Neumann walls)
vortex_tracking     plaquette-winding detection and trajectory stitching
cli                 configuration, experiment orchestration, file I/O
"""

__version__ = "0.1.0"
