import math

import numpy as np
import pytest

from coherent_qfi.classical import classical_fisher_s, intensity_pattern
from coherent_qfi.errors import EstimationFailedError, InvalidParameterError
from coherent_qfi.estimation import (
    CSV_FIELDS,
    EstimationReport,
    McConfig,
    estimation_experiment,
    log_likelihood,
    mle_separation,
    sample_detections,
)
from coherent_qfi.states import incoherent_mixture, superposition_state

PI = math.pi


def test_samples_are_centred(gauss):
    xs = sample_detections(intensity_pattern(incoherent_mixture(gauss, 2.0)), 10_000, seed=42)
    assert xs.shape == (10_000,)
    assert abs(xs.mean()) < 4 * xs.std() / math.sqrt(xs.size)
    # variance of the mixture is sigma^2 + s^2 / 4
    assert xs.var() == pytest.approx(2.0, rel=0.05)


def test_dark_fringe_is_avoided(gauss):
    pat = intensity_pattern(superposition_state(gauss, 1.0, PI))
    xs = sample_detections(pat, 1000, seed=1)
    assert not np.any(np.abs(xs) < 1e-3)


def test_sampling_edge_cases(gauss):
    pat = intensity_pattern(incoherent_mixture(gauss, 1.0))
    assert sample_detections(pat, 0, seed=0).size == 0
    with pytest.raises(InvalidParameterError):
        sample_detections(pat, -1)
    np.testing.assert_array_equal(sample_detections(pat, 50, seed=5), sample_detections(pat, 50, seed=5))


def test_mle_recovers_separation(gauss):
    xs = sample_detections(intensity_pattern(incoherent_mixture(gauss, 2.0)), 10_000, seed=7)
    est, info = mle_separation(xs, gauss, "incoherent", (0.0, 8.0), full_output=True)
    crb = 1.0 / (10_000 * classical_fisher_s(gauss, 2.0))
    assert abs(est - 2.0) < 5 * math.sqrt(crb)
    assert not info["at_boundary"]
    grid = np.linspace(est - 0.05, est + 0.05, 11)
    assert np.argmax(log_likelihood(xs, gauss, "incoherent", grid)) == 5


def test_mle_coherent(gauss):
    xs = sample_detections(intensity_pattern(superposition_state(gauss, 1.5, PI / 3)), 20_000, seed=11)
    est = mle_separation(xs, gauss, PI / 3, (0.0, 7.5))
    crb = 1.0 / (20_000 * classical_fisher_s(gauss, 1.5, PI / 3))
    assert abs(est - 1.5) < 5 * math.sqrt(crb)


def test_mle_boundary_and_errors(gauss):
    est, info = mle_separation([0.0], gauss, "incoherent", (0.0, 6.0), full_output=True)
    assert est == 0.0 and info["at_boundary"]
    with pytest.raises(InvalidParameterError):
        mle_separation([0.0], gauss, "incoherent", (0.0, 0.0))
    with pytest.raises(InvalidParameterError):
        mle_separation([], gauss, "incoherent", (0.0, 1.0))
    # a detection 100 widths out underflows to zero likelihood for every s
    with pytest.raises(EstimationFailedError):
        mle_separation([100.0], gauss, "incoherent", (0.0, 2.0))


def test_experiment_report(gauss):
    cfg = McConfig(gauss, 2.0, "incoherent", n=2000, trials=20, seed=3)
    a, b = estimation_experiment(cfg), estimation_experiment(cfg)
    assert a == b
    assert a.mse == pytest.approx(a.variance + a.bias**2, rel=1e-12)
    assert a.variance >= 0 and a.n_trials == 20 and a.n_photons == 2000
    assert a.crb_qfi <= a.crb_classical
    assert a.crb_qfi == pytest.approx(1 / (2000 * 0.25), rel=1e-6)
    assert estimation_experiment(McConfig(gauss, 2.0, n=2000, trials=20, seed=4)) != a


def test_report_serialization(gauss):
    rep = estimation_experiment(McConfig(gauss, 1.0, PI / 2, n=500, trials=3, seed=0))
    row = rep.csv_row().split(",")
    assert EstimationReport.csv_header().split(",") == list(CSV_FIELDS)
    assert len(row) == len(CSV_FIELDS)
    assert row[CSV_FIELDS.index("coherence")] == "1.57079633"
    kv = dict(line.split("=") for line in rep.to_kv().splitlines())
    assert kv["seed"] == "0" and kv["n_trials"] == "3"
    assert float(kv["mse"]) == pytest.approx(rep.mse, rel=1e-8)


def test_experiment_errors(gauss):
    with pytest.raises(InvalidParameterError):
        estimation_experiment(McConfig(gauss, 1.0, trials=1))
    with pytest.raises(InvalidParameterError):
        estimation_experiment(McConfig(gauss, 1.0, n=0))
    with pytest.raises(InvalidParameterError) as exc:
        estimation_experiment(McConfig(gauss, 1.0, n=10, trials=2, bounds=(1.0, 1.0)))
    assert "trial 0" in str(exc.value) and exc.value.trial == 0
