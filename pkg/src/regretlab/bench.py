"""Timing comparison between the compiled kernels and the python fallback."""

import time

import numpy as np

from ._backend import _load_compiled
from . import _pykernels


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _cases():
    rng = np.random.default_rng(7)
    xs = rng.standard_normal((4000, 5))
    ys = np.clip(rng.standard_normal(4000), -1, 1)
    prior = xs.T @ xs
    J = rng.integers(0, 3, size=200)
    obs = (rng.random(200) < 0.5).astype(float)
    return [
        ("vaw_run (T=4000, d=5)",
         lambda k: k.vaw_run(xs, ys, 1.0)),
        ("zeroreg_run (T=4000, d=5)",
         lambda k: k.zeroreg_run(xs, ys)),
        ("adapted_run (T=4000, d=5)",
         lambda k: k.adapted_run(xs, ys, 0.01, prior)),
        ("gram_stream (T=4000, d=5)",
         lambda k: k.gram_stream(xs)),
        ("vaw_unit_game (T=200, d=3, 200 trials)",
         lambda k: [k.vaw_unit_game(J, obs, 3, 1.0) for _ in range(200)]),
    ]


def run_bench(repeat: int = 3) -> list[str]:
    compiled = _load_compiled()
    rows = [f"{'kernel':<42}{'python':>12}{'compiled':>12}{'speedup':>10}"]
    for name, call in _cases():
        t_py = _time(lambda: call(_pykernels), repeat)
        if compiled is None:
            rows.append(f"{name:<42}{t_py:>11.4f}s{'-':>12}{'-':>10}")
            continue
        t_c = _time(lambda: call(compiled), repeat)
        rows.append(f"{name:<42}{t_py:>11.4f}s{t_c:>11.4f}s{t_py / t_c:>9.1f}x")
    if compiled is None:
        rows.append("compiled kernels not built; showing python backend only")
    return rows


if __name__ == "__main__":
    for line in run_bench():
        print(line)
