"""Maxwell solutions of a 1-D Ginzburg-Landau energy with mean-curvature
diffusion, and the associated Cahn-Hilliard gradient flow.

Modules:
    potential     -- double-well free energies, Gibbs function, equal-area rule
    numerics      -- Brent root finder, tanh-sinh quadrature for singular integrals
    phase_plane   -- first-integral machinery: admissible pairs, periods, moments
    stationary    -- Newton solver for the transition-layer solutions, energies
    cahn_hilliard -- conservative finite-volume gradient-flow simulator
    cli           -- batch front end
"""

__version__ = "0.1.0"
