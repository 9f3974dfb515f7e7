import numpy as np
import pytest

from hoalm.bench.classify import (
    LINEAR, SUBLINEAR, SUPERLINEAR, UNDETERMINED, ClassifierConfig, classify, error_ratios,
)


def test_geometric_is_linear():
    c = classify(0.5 ** np.arange(30))
    assert c.regime == LINEAR and c.at_least_linear()
    assert all(r == pytest.approx(0.5) for r in c.ratios)


def test_quadratic_convergence_is_superlinear():
    e = [1e-1]
    for _ in range(5):
        e.append(e[-1] ** 2)
    c = classify(e + [0.0, 0.0])
    assert c.regime == SUPERLINEAR and c.at_least_linear()


def test_harmonic_decay_is_sublinear():
    n = np.arange(1, 60)
    c = classify(1.0 / n)
    assert c.regime == SUBLINEAR and not c.at_least_linear()


def test_log_type_envelope_is_sublinear():
    n = np.arange(40)
    c = classify(1.0 / (1.0 + 0.3 * n) ** 2)
    assert c.regime == SUBLINEAR


def test_increasing_sequence_is_undetermined():
    assert classify([1.0, 2.0, 1.5, 3.0]).regime == UNDETERMINED


def test_short_sequences_are_undetermined():
    assert classify([]).regime == UNDETERMINED
    assert classify([1.0]).regime == UNDETERMINED
    assert classify([1.0, 0.5]).regime == UNDETERMINED


def test_noise_floor_truncates():
    e = np.concatenate([0.1 ** np.arange(12), [3e-13, 5e-13, 2e-13]])
    ratios, used = error_ratios(e)
    assert used == 12
    assert classify(e).regime == LINEAR


def test_nan_entries_are_dropped():
    e = np.array([np.nan, 1.0, 0.5, 0.25, 0.125, 0.0625])
    assert classify(e).regime == LINEAR


def test_config_thresholds_matter():
    e = 0.5 ** np.arange(5) * np.array([1, 1, 1, 1, 0.01])
    assert classify(e).regime == SUPERLINEAR
    strict = ClassifierConfig(superlinear_drop=1e-3)
    assert classify(e, strict).regime == UNDETERMINED


def test_slow_linear_with_transient_is_not_sublinear():
    e = np.concatenate([0.3 ** np.arange(4), 0.3 ** 3 * 0.95 ** np.arange(1, 40)])
    assert classify(e).regime == LINEAR
