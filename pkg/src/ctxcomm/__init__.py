"""Simulation and verification lab for one-way communication under contextual uncertainty."""

from .core import (
    BitVector,
    BudgetExceeded,
    ExperimentReport,
    IndexSubset,
    SignVector,
    SortedTuple,
    SubsetFamily,
    hamming_distance,
    iterated_log,
    sheppard,
    sign,
    substream,
)
from .functions import (
    ComposedF,
    Constant,
    GapInnerProduct,
    HammingThreshold,
    MajOfSubsetParity,
    SubsetMajority,
    XorParity,
    distance_exact,
    distance_monte_carlo,
)
from .protocols import gip_estimate, hash_set_recovery, isr_uncertain_protocol
from .reductions import protocol_pi_prime, shift_graph, stretch
from .samplers import (
    ISR,
    ConditionedNoisy,
    KappaEpsilon,
    NoisyPairs,
    NuEpsilon,
    Public,
    SubsetNoise,
    UniformPairs,
)
from .simulation import simulation_protocol
from .verifiers import berry_esseen_check, noise_stability_mc, sheppard_calibration

__version__ = "0.1.0"
