"""
Evaluation protocols: leave-one-surface-out validation, cross classification
over training sets and nu, consecutive-subset sweeps, overlap studies and the
re-imaging reproducibility check.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from fractomatch.emfit import FitConfig
from fractomatch.errors import ProtocolError
from fractomatch.matchkit.model import MatchModel, train
from fractomatch.matchkit.scoring import classify_subset
from fractomatch.models import PairLabel
from fractomatch.simharness.peacock import DEFAULT_PERMUTATIONS, PeacockResult, peacock_test_2d
from fractomatch.simharness.synth import SyntheticSet
from fractomatch.simharness.tally import Tally, TallyTable
from fractomatch.spectral.bands import DEFAULT_MIN_BAND_CELLS, BandPlan
from fractomatch.spectral.correlation import (
    PairObservation,
    compute_spectra,
    correlate_spectra,
    restrict_columns,
)
from fractomatch.spectral.dataset import split_by_label

logger = logging.getLogger("fractomatch.simharness")

MIN_LOOCV_SURFACES = 9
NU_GRID = (3.0, 5.0, 10.0, 15.0, 20.0, 30.0)
OVERLAP_COLUMN_STEPS = {"75%": 1, "50%": 2, "0%": 4}


def nu_label(nu: float) -> str:
    return f"{nu:g}"


def observations_for_set(
    synthetic: SyntheticSet,
    plan: BandPlan,
    transform_size: int,
    hann: bool = False,
    min_cells: int = DEFAULT_MIN_BAND_CELLS,
    workers: int = 1,
) -> List[PairObservation]:
    """PairObservations for all n^2 base/tip combinations of a set, sorted by pair_id."""
    base_spectra = {
        name: compute_spectra(images, transform_size, hann, workers)
        for name, images in synthetic.base_images.items()
    }
    tip_spectra = {
        name: compute_spectra(images, transform_size, hann, workers)
        for name, images in synthetic.tip_images.items()
    }
    observations = []
    for base, tip, label in synthetic.pairs():
        r, z = correlate_spectra(base_spectra[base], tip_spectra[tip], plan, min_cells)
        observations.append(PairObservation(z, (base, tip), label, plan, r))
    return sorted(observations, key=lambda obs: obs.key)


def surfaces_of(observations: Sequence[PairObservation]) -> List[str]:
    return sorted({name for obs in observations for name in obs.pair_id})


def _train_on(
    observations: Sequence[PairObservation],
    config: FitConfig,
    prior: float,
    name: str,
    allow_degenerate: bool = True,
) -> MatchModel:
    matches, nonmatches = split_by_label(observations)
    return train(matches, nonmatches, config, prior, allow_degenerate=allow_degenerate, name=name)


def run_loocv(
    observations: Sequence[PairObservation],
    config: FitConfig,
    prior: float = 0.5,
    threshold_logodds: Optional[float] = None,
) -> TallyTable:
    """
    Leave one surface out: train without every pair involving it, classify those pairs.

    A non-match pair involves two surfaces and is therefore tested in two folds.

    Raises:
        ProtocolError: fewer than nine surfaces
        DegenerateFitError: a fold's fit collapsed
    """
    surfaces = surfaces_of(observations)
    if len(surfaces) < MIN_LOOCV_SURFACES:
        raise ProtocolError(
            f"LOOCV needs at least {MIN_LOOCV_SURFACES} surfaces", {"surfaces": len(surfaces)}
        )
    q = observations[0].shape[1]
    tally = Tally(nu_label(config.nu), q)
    for surface in surfaces:
        held_out = [obs for obs in observations if obs.involves(surface)]
        training = [obs for obs in observations if not obs.involves(surface)]
        model = _train_on(training, config, prior, name=f"loocv-{surface}", allow_degenerate=False)
        for obs in held_out:
            tally.add(classify_subset(model, obs, range(q), threshold_logodds))
        logger.debug("LOOCV fold %s: %d held-out pairs", surface, len(held_out))
    return TallyTable([tally.row()])


def run_subset_sweep(
    models: Sequence[MatchModel],
    test_observations: Sequence[PairObservation],
    k_values: Sequence[int],
    threshold_logodds: Optional[float] = None,
    use_calibrated: bool = False,
) -> TallyTable:
    """
    Classify every consecutive window of size k of every test pair with every model.

    One row per (nu, k), summed over the models sharing that nu.
    """
    if not models:
        raise ProtocolError("No models to evaluate")
    if not test_observations:
        raise ProtocolError("No test observations")
    q = models[0].q
    for k in k_values:
        if k < 1 or k > q:
            raise ProtocolError("Subset size outside 1..q", {"k": k, "q": q})

    table = TallyTable()
    for nu in sorted({model.nu for model in models}):
        group = [model for model in models if model.nu == nu]
        for k in k_values:
            tally = Tally(nu_label(nu), k)
            for model in group:
                for obs in test_observations:
                    for start in range(q - k + 1):
                        window = range(start, start + k)
                        tally.add(classify_subset(model, obs, window, threshold_logodds, use_calibrated))
            table.append(tally.row())
    return table


def cross_classify(
    models: Sequence[MatchModel],
    test_observations: Sequence[PairObservation],
    threshold_logodds: Optional[float] = None,
) -> TallyTable:
    """Every model classifies every test pair on all images."""
    return run_subset_sweep(models, test_observations, [models[0].q], threshold_logodds)


def train_sets(
    training_sets: Mapping[str, Sequence[PairObservation]],
    config: FitConfig,
    prior: float = 0.5,
) -> List[MatchModel]:
    """One model per named training set, in name order."""
    return [
        _train_on(training_sets[name], config, prior, name=name)
        for name in sorted(training_sets)
    ]


def run_nu_sweep(
    training_sets: Mapping[str, Sequence[PairObservation]],
    test_observations: Sequence[PairObservation],
    config: FitConfig,
    nu_values: Sequence[float] = NU_GRID,
    prior: float = 0.5,
) -> Tuple[Dict[float, List[MatchModel]], TallyTable]:
    """Train every set at every nu and cross-classify all test pairs."""
    models: Dict[float, List[MatchModel]] = {}
    table = TallyTable()
    for nu in nu_values:
        nu_config = config.model_copy(update={"nu": float(nu)})
        models[float(nu)] = train_sets(training_sets, nu_config, prior)
        table.extend(cross_classify(models[float(nu)], test_observations))
        logger.info("nu=%g done", nu)
    return models, table


def every_nth_column(observations: Sequence[PairObservation], step: int) -> List[PairObservation]:
    """Keep images 0, step, 2 step, ...; a 75%-overlap run thinned to 50% (2) or no overlap (4)."""
    if not observations:
        return []
    columns = list(range(0, observations[0].shape[1], step))
    return [restrict_columns(obs, columns) for obs in observations]


def run_overlap_study(
    training_sets: Mapping[str, Sequence[PairObservation]],
    test_observations: Sequence[PairObservation],
    config: FitConfig,
    prior: float = 0.5,
) -> Dict[str, TallyTable]:
    """
    Retrain on thinned image sequences and sweep consecutive subsets k = 2..q'.

    Returns:
        Tally tables keyed "75%", "50%" and "0%"
    """
    results: Dict[str, TallyTable] = {}
    for overlap, step in OVERLAP_COLUMN_STEPS.items():
        thinned_sets = {name: every_nth_column(obs, step) for name, obs in training_sets.items()}
        thinned_test = every_nth_column(test_observations, step)
        q = thinned_test[0].shape[1]
        if q < 2:
            raise ProtocolError("Too few images left after thinning", {"overlap": overlap, "q": q})
        models = train_sets(thinned_sets, config, prior)
        results[overlap] = run_subset_sweep(models, thinned_test, list(range(2, q + 1)))
    return results


def matched_scatter(observations: Sequence[PairObservation], bands: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """(band a, band b) correlation points of every image of every true match."""
    points = [
        obs.r[list(bands), :].T
        for obs in observations
        if obs.label == PairLabel.MATCH
    ]
    if not points:
        raise ProtocolError("No true-match observations to compare")
    return np.vstack(points)


def reproducibility_check(
    observations_a: Sequence[PairObservation],
    observations_b: Sequence[PairObservation],
    bands: Tuple[int, int] = (0, 1),
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: Optional[int] = None,
) -> PeacockResult:
    """Peacock test between the matched-pair correlation scatters of two imaging repetitions."""
    return peacock_test_2d(
        matched_scatter(observations_a, bands),
        matched_scatter(observations_b, bands),
        permutations,
        seed,
    )
