"""Compiled kernels against the pure-python reference, and backend selection."""

import numpy as np
import pytest

from regretlab import _pykernels
from regretlab._backend import BACKEND, get_kernels
from regretlab.forecasters import ForecasterSpec, predict_sequence
from regretlab.sequences import gen_gaussian

try:
    compiled = get_kernels("compiled")
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled kernels not built")


def test_backend_selection():
    assert BACKEND in ("compiled", "python")
    assert get_kernels("python") is _pykernels
    assert get_kernels(None).NAME == BACKEND
    with pytest.raises(ValueError, match="unknown backend"):
        get_kernels("fortran")


def _game(T=500, d=4, seed=0):
    seq = gen_gaussian(d, T, seed=seed)
    return np.ascontiguousarray(seq.xs), np.ascontiguousarray(seq.ys)


@needs_compiled
class TestCompiledMatchesReference:
    def test_vaw_sherman_morrison_fast_path(self):
        # the rank-one-update fast path must track the per-round resolves
        for seed in range(3):
            xs, ys = _game(seed=seed)
            fast = np.asarray(compiled.vaw_run(xs, ys, 0.5))
            ref = _pykernels.vaw_run(xs, ys, 0.5)
            assert np.abs(fast - ref).max() < 1e-10

    def test_zeroreg(self):
        xs, ys = _game()
        fast = np.asarray(compiled.zeroreg_run(xs, ys))
        ref = _pykernels.zeroreg_run(xs, ys)
        assert np.abs(fast - ref).max() < 1e-10

    def test_adapted(self):
        xs, ys = _game()
        prior = xs.T @ xs
        fast = np.asarray(compiled.adapted_run(xs, ys, 0.01, prior))
        ref = _pykernels.adapted_run(xs, ys, 0.01, prior)
        assert np.abs(fast - ref).max() < 1e-10

    def test_gram_stream(self):
        xs, _ = _game()
        eig_fast, quad_fast = compiled.gram_stream(xs)
        eig_ref, quad_ref = _pykernels.gram_stream(xs)
        assert np.abs(np.asarray(eig_fast) - eig_ref).max() < 1e-9
        assert np.abs(np.asarray(quad_fast) - quad_ref).max() < 1e-10

    def test_vaw_unit_game(self):
        rng = np.random.default_rng(1)
        J = rng.integers(0, 3, size=300)
        obs = (rng.random(300) < 0.4).astype(float)
        fast = np.asarray(compiled.vaw_unit_game(J, obs, 3, 1.0))
        ref = _pykernels.vaw_unit_game(J, obs, 3, 1.0)
        assert np.abs(fast - ref).max() < 1e-10

    def test_rank_deficient_rounds(self):
        # repeated features keep the Gram matrix singular for a while
        rng = np.random.default_rng(2)
        base = rng.standard_normal((2, 4))
        xs = np.ascontiguousarray(base[rng.integers(0, 2, size=60)])
        ys = np.clip(rng.standard_normal(60), -1, 1)
        fast = np.asarray(compiled.zeroreg_run(xs, ys))
        ref = _pykernels.zeroreg_run(xs, ys)
        assert np.abs(fast - ref).max() < 1e-10


class TestPythonKernelsMatchStateful:
    """The sequence kernels must agree with the round-by-round objects."""

    @pytest.mark.parametrize("kind", ["vaw", "zeroreg", "adapted"])
    def test_kernels_match_forecasters(self, kind):
        seq = gen_gaussian(3, 80, seed=5)
        spec = {"vaw": ForecasterSpec.vaw(0.8),
                "zeroreg": ForecasterSpec.zeroreg(),
                "adapted": ForecasterSpec.adapted(0.3)}[kind]
        stateful = predict_sequence(spec.build(3, features=seq.xs),
                                    seq.xs, seq.ys)
        via_python = predict_sequence(spec, seq.xs, seq.ys, backend="python")
        assert np.abs(stateful - via_python).max() < 1e-10
        if compiled is not None:
            via_compiled = predict_sequence(spec, seq.xs, seq.ys,
                                            backend="compiled")
            assert np.abs(stateful - via_compiled).max() < 1e-10

    def test_unit_game_matches_stateful_hypotheticals(self):
        rng = np.random.default_rng(6)
        d, T, lam = 3, 40, 1.0
        J = rng.integers(0, d, size=T)
        obs = (rng.random(T) < 0.5).astype(float)
        ref = _pykernels.vaw_unit_game(J, obs, d, lam)

        f = ForecasterSpec.vaw(lam).build(d)
        eye = np.eye(d)
        manual = np.empty((T, d))
        for t in range(T):
            for j in range(d):
                manual[t, j] = f.predict(eye[j])
            f.predict(eye[J[t]])
            f.observe(obs[t])
        assert np.abs(ref - manual).max() < 1e-10


def test_bench_runs():
    from regretlab.bench import run_bench
    rows = run_bench(repeat=1)
    assert any("vaw_run" in row for row in rows)
