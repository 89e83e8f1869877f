import math

import numpy as np
import pytest

import koopkit as kk


def one_step_pairs(mapping, starts):
    xplus = np.column_stack([mapping.step(starts[:, i]) for i in range(starts.shape[1])])
    return kk.SnapshotPair(starts, xplus)


@pytest.fixture
def benchmark_model():
    rng = np.random.default_rng(7)
    mapping = kk.example1_map(0.9, 0.8)
    starts = rng.uniform(-1.0, 1.0, size=(2, 50))
    dictionary = kk.polynomial_dictionary(
        2, [[1, 0], [0, 1], [2, 0]], np.eye(3), ["x1", "x2", "x1^2"]
    )
    return kk.fit_edmd(one_step_pairs(mapping, starts), dictionary)


def test_version():
    assert kk.__version__


def test_map_and_simulation():
    mapping = kk.example1_map(0.9, 0.8)
    step = mapping.step(np.array([1.0, 1.0]))
    assert step == pytest.approx([0.9, 0.79])
    traj = kk.simulate_map(mapping, np.array([1.0, 1.0]), 5)
    assert traj.states.shape == (6, 2)


def test_edmd_recovery_is_exact(benchmark_model):
    expected = np.array([[0.9, 0, 0], [0, 0.8, -0.01], [0, 0, 0.81]])
    assert np.max(np.abs(benchmark_model.A - expected)) < 1e-8
    assert np.max(np.abs(benchmark_model.C - np.array([[1, 0, 0], [0, 1, 0]]))) < 1e-8


def test_predict_matches_simulation(benchmark_model):
    mapping = kk.example1_map(0.9, 0.8)
    x0 = np.array([0.7, -0.4])
    predicted = benchmark_model.predict(x0, 20)
    truth = kk.simulate_map(mapping, x0, 20).states
    assert np.max(np.abs(predicted - truth)) < 1e-8


def test_spectrum_and_lyapunov(benchmark_model):
    spectral = kk.extract_spectrum(benchmark_model)
    assert np.allclose(np.sort(spectral.eigenvalues.real)[::-1], [0.9, 0.81, 0.8])
    report = kk.classify_stability(spectral)
    assert report.overall == "stable"
    cert = kk.synthesize_lyapunov(spectral)
    diag = np.real(np.diag(cert.P))
    assert sorted(diag) == pytest.approx(
        sorted([5.263158, 2.907822, 2.777778]), abs=1e-5
    )


def test_hankel_dmd_eigenvalue():
    series = 0.9 ** np.arange(30)
    model = kk.hankel_dmd(series, 2)
    spectral = kk.extract_spectrum(model)
    assert abs(spectral.eigenvalues[0] - 0.9) < 1e-8


def test_bilinear_lifting_and_mpc():
    rng = np.random.default_rng(11)
    system = kk.example4_system(-0.5, -0.5)
    lifting = kk.polynomial_dictionary(
        2,
        [[1, 0], [0, 1], [2, 0], [0, 0]],
        np.array([[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]]),
        ["x1", "x2+x1^2", "x1^2", "1"],
    )
    samples = rng.uniform(-1.0, 1.0, size=(2, 100))
    model = kk.lift_control_fields(system, lifting, samples)
    b1 = np.array([[0, 0, 0, 1], [2, 0, 1, 0], [2, 0, 0, 0], [0, 0, 0, 0.0]])
    assert np.max(np.abs(model.B[0] - b1)) < 1e-10
    assert model.fit_residual < 1e-10

    problem = kk.MpcProblem(
        horizon=8,
        Q=np.eye(2),
        R=0.01 * np.eye(2),
        u_lower=np.array([-1.0, -1.0]),
        u_upper=np.array([1.0, 1.0]),
        y_ref=np.zeros((1, 2)),
        ts=0.1,
    )
    result = kk.run_mpc(system, model, problem, np.array([0.8, -0.6]), 30)
    assert result.qp_nonconverged_steps == 0
    assert np.all(np.abs(result.inputs) <= 1.0)
    final = result.closed_loop.states[-1]
    assert np.linalg.norm(final) < np.linalg.norm([0.8, -0.6])


def test_model_roundtrip(tmp_path, benchmark_model):
    path = tmp_path / "model.json"
    kk.save_model(path, benchmark_model)
    loaded = kk.load_model(path)
    assert np.array_equal(loaded.A, benchmark_model.A)
    x = np.array([0.3, -0.9])
    assert np.array_equal(loaded.dictionary(x), benchmark_model.dictionary(x))


def test_errors_are_python_exceptions():
    with pytest.raises(kk.KoopkitError):
        kk.example1_map(2.0, 0.5)
