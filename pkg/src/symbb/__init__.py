"""Branch-and-bound toolkit for cardinality-constrained binary quadratic
optimization with symmetry exploitation.

Main entry points:

- :mod:`symbb.instance` -- QAPLIB parsing, QAP-to-BQOP conversion, objectives.
- :mod:`symbb.symmetry` -- matrix automorphism groups and orbits.
- :mod:`symbb.subproblem` -- reduced subproblems from variable fixings.
- :mod:`symbb.dnn` -- Lagrangian DNN lower bounds via Newton bracketing.
- :mod:`symbb.bb` -- target-lower-bound branch and bound.
- :mod:`symbb.estimator` -- sampled-subtree work estimation.
- :mod:`symbb.cli` -- the ``symbb`` command line interface.
"""

__version__ = "0.1.0"
