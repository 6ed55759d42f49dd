"""Measurement-device-independent certification of quantum coherence from click counts."""

__version__ = "0.1.0"

from .certifier import (
    CoherenceCertificate,
    DualBound,
    FeasibleRegion,
    SearchConfig,
    certify,
    dual_lower_bound,
    dual_objective,
    labeling_bound,
    primal_oracle,
)
from .decoy import (
    CountsRecord,
    IntensityConfig,
    ProbInterval,
    YieldInterval,
    gaussian_interval,
    single_photon_bounds_decoy,
    single_photon_bounds_nondecoy,
)
from .errors import MdicwError
from .pipeline import certify_counts, yields_from_counts
from .qubit import CoherenceBasis, QubitState, Witness, rel_entropy_coherence
from .randomness import RandomnessBudget, ToeplitzSeed, toeplitz_extract
from .simulator import ChannelConfig, attack_demo, loss_sweep, optimize_intensities
from .tomography import BinaryPovm, povm_from_probs, probs_from_povm, validate_povm
