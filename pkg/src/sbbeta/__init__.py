"""Stick-breaking beta processes: densities, forward sampling, truncation
bounds and an MCMC sampler for beta-Bernoulli factor models."""
from __future__ import annotations

from ._accel import backend
from .construct import (Atom, BetaProcessDraw, FeatureAllocation, PartitionedBase, draw_bernoulli_process,
                        draw_beta_process, draw_beta_process_general, draw_ibp, draw_round)
from .measure import (ProcessParams, expected_round_weight, joint_round_density, levy_density,
                      observed_atom_rate_xi, round_density, tail_density)
from .quadrature import QuadratureConfig, QuadratureError
from .truncation import (BoundCurve, bound_sweep, corollary1_bound, expected_missing_ones, l1_gap, legacy_bound,
                         missing_atom_rate, simple_function_bound, theorem3_bound)

__version__ = "0.1.0"
