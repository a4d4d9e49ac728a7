"""Functional error identities and two-sided bounds for mixed approximations.

Submodules: :mod:`linalg`, :mod:`abstract`, :mod:`mesh`, :mod:`fem`,
:mod:`estimator`, :mod:`timestep`, :mod:`robin` and :mod:`cli`.
"""

__version__ = "0.1.0"
