import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fogdetect import detection
from fogdetect.packing import DataSample


def test_scatter_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 4096, size=(25, 3))
    assert np.allclose(detection.scatter_matrix(x), np.cov(x.T, bias=True))


@pytest.mark.parametrize(
    "M,expected",
    [
        ([[2.0, 1.0], [1.0, 2.0]], [3.0, 1.0]),
        ([[1.0, 1.0], [1.0, 1.0]], [2.0, 0.0]),
        ([[5.0, 0.0], [0.0, 2.0]], [5.0, 2.0]),
        ([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0]),
        ([[7.0]], [7.0]),
        ([[2.0, 0, 0], [0, 3.0, 4.0], [0, 4.0, 9.0]], [11.0, 2.0, 1.0]),
    ],
)
def test_eigen_known(M, expected):
    assert np.allclose(detection.eigen_sym(np.array(M)), expected)


def test_eigen_rejects_asymmetric():
    with pytest.raises(ValueError):
        detection.eigen_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        detection.eigen_sym(np.ones((2, 3)))


@settings(max_examples=80, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        st.tuples(st.integers(2, 25), st.integers(1, 6)),
        elements=st.integers(0, 4095).map(float),
    )
)
def test_eigen_matches_eigvalsh(x):
    S = detection.scatter_matrix(x)
    ref = np.sort(np.linalg.eigvalsh(S))[::-1]
    tol = 1e-8 * max(1.0, float(np.max(np.abs(S))))
    assert np.allclose(detection.eigen_sym(S), ref, atol=tol, rtol=1e-9)


def test_dispersion_values():
    r = detection.dispersion(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert r.rank_used == 1 and r.dispersion == pytest.approx(2.0)
    r = detection.dispersion(4.0 * np.eye(3))
    assert r.rank_used == 3 and r.dispersion == pytest.approx(64.0)
    assert detection.dispersion(np.zeros((2, 2))).dispersion == 0.0


def test_constant_sets_zero_dispersion():
    sets = np.full((5, 10, 2), 1000)
    assert np.all(detection.set_dispersions(sets) == 0.0)


def test_injection_statistics():
    # d* - d = floor(d * delta): mean about -1/2, std about d * alpha
    rng = np.random.default_rng(42)
    d, alpha_sq = 2000, 0.05
    base = np.full((200_000, 1), d)
    diff = detection.inject_sets(base, alpha_sq, rng) - d
    assert diff.std() == pytest.approx(d * math.sqrt(alpha_sq), rel=0.01)
    assert diff.mean() == pytest.approx(-0.5, abs=3 * d * math.sqrt(alpha_sq) / math.sqrt(base.size))


def test_inject_sample_and_clamp():
    rng = np.random.default_rng(1)
    s = detection.inject_deviation(DataSample((4000, 10), index=3), 0.5, rng, d=4095)
    assert s.index == 3 and all(0 <= v <= 4095 for v in s.dims)
    out = detection.inject_sets(np.full((1000, 2), 4000), 0.5, np.random.default_rng(2), d=4095)
    assert out.min() >= 0 and out.max() == 4095
    with pytest.raises(ValueError):
        detection.inject_sets(np.zeros((1, 1), dtype=int), 0.0, rng)


def _oracle_threshold(D, target):
    # lower Th from the top until the detection rate reaches the target
    D = np.asarray(D, dtype=float)
    cands = sorted(set(D.tolist()) | {math.nextafter(float(D.min()), 0.0)}, reverse=True)
    for th in cands:
        if th > 0 and np.mean(D > th) >= target:
            return th
    return None


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(1e-3, 1e12), min_size=1, max_size=60),
    st.sampled_from([0.5, 0.9, 0.95, 1.0]),
)
def test_select_threshold_oracle(D, target):
    th = detection.select_threshold(D, target)
    assert th == _oracle_threshold(D, target)
    assert np.mean(np.asarray(D) > th) >= target


def test_select_threshold_hand():
    D = list(range(1, 21))
    assert detection.select_threshold(D, 0.95) == 1.0
    assert detection.select_threshold(D, 0.9) == 2.0
    assert detection.select_threshold([5.0] * 4, 1.0) == math.nextafter(5.0, 0.0)
    with pytest.raises(detection.TrainingError):
        detection.select_threshold([0.0, 0.0], 1.0)
    with pytest.raises(detection.TrainingError):
        detection.select_threshold([], 0.95)


def test_train_threshold_reaches_target():
    rng = np.random.default_rng(0)
    sets = rng.integers(900, 1100, size=(500, 10, 2))
    th = detection.train_threshold(sets, 0.05, np.random.default_rng(1), d=4095)
    assert th.train_tpr >= 0.95 and th.N == 10 and th.alpha_sq == 0.05
    with pytest.raises(ValueError):
        detection.train_threshold(sets[:99], 0.05, rng)


def test_train_threshold_deterministic():
    sets = np.random.default_rng(0).integers(900, 1100, size=(300, 10, 2))
    a = detection.train_threshold(sets, 0.05, np.random.default_rng(7))
    b = detection.train_threshold(sets, 0.05, np.random.default_rng(7))
    assert a == b


def test_threshold_ordering_in_alpha():
    sets = np.random.default_rng(3).integers(900, 1100, size=(1000, 10, 2))
    vals = [detection.train_threshold(sets, a, np.random.default_rng(9)).value for a in (0.01, 0.05, 0.1)]
    assert vals[0] < vals[1] < vals[2]


def test_evaluate_separated_oracle():
    # clean sets are constant (dispersion 0); any injected set at this noise
    # level has positive dispersion, so a tiny threshold separates perfectly
    sets = np.full((1000, 10, 2), 2000)
    c = detection.evaluate(sets, 1e-6, 0.05, np.random.default_rng(0))
    assert (c.N_tu, c.N_tn) == (200, 800)
    assert c.tpr == 1.0 and c.fpr == 0.0


def test_evaluate_infinite_threshold():
    sets = np.random.default_rng(0).integers(0, 4096, size=(200, 10, 2))
    th = detection.Threshold(math.inf, 0.05, 10)
    c = detection.evaluate(sets, th, 0.05, np.random.default_rng(0))
    assert c.tpr == 0.0 and c.fpr == 0.0


def test_classify_strict():
    assert detection.classify(10.0, 9.0)
    assert not detection.classify(9.0, 9.0)


def test_threshold_validation():
    with pytest.raises(ValueError):
        detection.Threshold(0.0, 0.05, 10)
    with pytest.raises(ValueError):
        detection.Threshold(1.0, 0.05, 10, target_tpr=0.0)
