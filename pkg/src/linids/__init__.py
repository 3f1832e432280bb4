"""Finite-action stochastic linear bandit simulation library.

Submodules:

* :mod:`linids.core`       -- environments, instance generators, RNG streams
* :mod:`linids.estimator`  -- incremental regularized least squares + confidence radii
* :mod:`linids.ids`        -- information-directed sampling (gap/info trade-off)
* :mod:`linids.baselines`  -- LinUCB, Thompson sampling, sample-based Bayesian trade-off
* :mod:`linids.lowerbound` -- asymptotic allocation program and its solvers
* :mod:`linids.harness`    -- seeded experiments, CSV traces, aggregation, sweeps
* :mod:`linids.cli`        -- command-line entry point
"""

__version__ = "0.1.0"
