"""Monte Carlo and closed-form tools for excursion and level-set components
of planar Gaussian fields.
"""

__version__ = '0.1.0'
