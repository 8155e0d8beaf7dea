"""Monte Carlo two-slit scattering of charged particles on a charged screen."""

__version__ = "0.1.0"
