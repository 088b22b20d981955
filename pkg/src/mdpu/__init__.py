"""Learning in Markov decision processes whose actions are partly hidden.

The package bundles a tabular MDP core, discovery-probability families, a
seeded hidden-action simulator, the R-MAX and URMAX learners, calculators
for the sample-size constants, and a small experiment harness.
"""

from .discovery import (
    DiscoveryFamily,
    discovery_prob,
    divergence_class,
    nondiscovery_product,
    partial_sum,
    solve_partial_sum,
    total_mass,
)
from .env import ContractViolation, MdpuEnv, Observation
from .learner import ApproxModel, rmax_run
from .mdp import (
    HorizonPlan,
    MdpSpec,
    StationaryPolicy,
    evaluate_policy,
    opt_oracle,
    plan_finite_horizon,
    validate_spec,
)
from .model import EXPLORE, DmKnowledge, MdpuSpec, ScenarioError, load_scenario, parse_scenario, validate_mdpu
from .theory import (
    BoundFunction,
    impossibility_gap,
    k0,
    k1_rmax,
    k1_urmax,
    k2_k3,
    lower_bound_steps,
)
from .urmax import UrmaxConfig, exploit, urmax_inner, urmax_outer

__version__ = "0.1.0"
