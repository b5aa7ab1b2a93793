"""
Synthetic surfaces and evaluation protocols.
"""

from fractomatch.simharness.peacock import PeacockResult, peacock_test_2d
from fractomatch.simharness.protocols import (
    cross_classify,
    observations_for_set,
    reproducibility_check,
    run_loocv,
    run_nu_sweep,
    run_overlap_study,
    run_subset_sweep,
)
from fractomatch.simharness.synth import SimSpec, SyntheticSet, simulate_set, synth_pair, synth_surface
from fractomatch.simharness.tally import TallyRow, TallyTable

__all__ = [
    "SimSpec",
    "SyntheticSet",
    "synth_surface",
    "synth_pair",
    "simulate_set",
    "observations_for_set",
    "run_loocv",
    "run_subset_sweep",
    "cross_classify",
    "run_nu_sweep",
    "run_overlap_study",
    "reproducibility_check",
    "peacock_test_2d",
    "PeacockResult",
    "TallyRow",
    "TallyTable",
]
