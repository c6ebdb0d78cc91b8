"""Benchmark the compiled kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py            # kernel microbenchmarks
    python benchmarks/bench_kernels.py --end-to-end   # adds a training-step timing
                                                      # under each backend (subprocess)

Matrix products are BLAS-backed in both paths and are not benchmarked here;
the compiled core covers the fused row-wise/elementwise kernels where numpy's
one-temporary-per-step evaluation dominates at desk-scale shapes.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hybridref.kernels import get_backend


def _time(fn, *args, repeats=2000):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(repeats):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def _cases(rng):
    attn = np.ascontiguousarray(rng.normal(size=(2 * 24, 24)))       # attention rows
    vocab_rows = np.ascontiguousarray(rng.normal(size=(2, 120)))     # mask logits
    states = np.ascontiguousarray(rng.normal(size=(24, 32)))         # layer activations
    gain = np.ascontiguousarray(rng.normal(size=32))
    bias = np.ascontiguousarray(rng.normal(size=32))
    ffn = np.ascontiguousarray(rng.normal(size=24 * 128))            # ffn activations
    grad = np.ascontiguousarray(rng.normal(size=ffn.shape))
    scalar = np.ascontiguousarray(rng.normal(size=1))                # rank-loss argument
    p = np.ascontiguousarray(rng.normal(size=60_000))
    g = np.ascontiguousarray(rng.normal(size=60_000))

    def adam_case(backend):
        m, v = np.zeros_like(p), np.zeros_like(p)
        return lambda: backend.adam_update(p.copy(), g, m, v, 1e-3, 0.9, 0.999, 1e-8, 3)

    return [
        ("softmax_fwd (48x24)", lambda b: lambda: b.softmax_fwd(attn), 5000),
        ("log_softmax_fwd (2x120)", lambda b: lambda: b.log_softmax_fwd(vocab_rows), 5000),
        ("layernorm_fwd (24x32)", lambda b: lambda: b.layernorm_fwd(states, gain, bias, 1e-12), 5000),
        ("gelu_fwd (3072)", lambda b: lambda: b.gelu_fwd(ffn), 3000),
        ("gelu_bwd (3072)", lambda b: lambda: b.gelu_bwd(ffn, grad), 3000),
        ("softplus_fwd (scalar)", lambda b: lambda: b.softplus_fwd(scalar), 5000),
        ("adam_update (60k)", adam_case, 200),
    ]


def bench_kernels():
    python = get_backend("python")
    try:
        compiled = get_backend("compiled")
    except Exception as exc:
        print(f"compiled backend unavailable ({exc}); nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, make, repeats in _cases(rng):
        t_py = _time(make(python), repeats=repeats)
        t_c = _time(make(compiled), repeats=repeats)
        print(f"{name:28s} {t_py * 1e6:9.1f}u {t_c * 1e6:9.1f}u {t_py / t_c:7.2f}x", flush=True)


_WORKER_FLAG = "--train-step-worker"


def _train_step_worker():
    from hybridref import kernels
    from hybridref.data import SynthConfig, build_synthetic_corpus
    from hybridref.encoder import EncoderConfig
    from hybridref.training import TrainConfig, train

    splits = build_synthetic_corpus(SynthConfig(n_train=64, n_dev=8, seed=0))
    cfg = TrainConfig(batch_size=16, warmup_steps=2, max_epochs=3, select_epochs=(1, 3),
                      seed=0, track_train_accuracy=False, swa_enabled=False)
    start = time.perf_counter()
    train(splits["train"], splits["dev"], EncoderConfig(), cfg)
    elapsed = time.perf_counter() - start
    print(f"  backend={kernels.BACKEND_NAME}: 3 epochs x 64 pairs in {elapsed:.2f}s "
          f"({elapsed / 12 * 1e3:.0f} ms/step)")


def bench_end_to_end():
    print("end-to-end training step:", flush=True)
    for backend in ("python", "compiled"):
        env = dict(os.environ, HYBRIDREF_KERNELS=backend)
        subprocess.run([sys.executable, __file__, _WORKER_FLAG], env=env, check=True)


if __name__ == "__main__":
    if _WORKER_FLAG in sys.argv:
        _train_step_worker()
        sys.exit(0)
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--end-to-end", action="store_true",
                        help="also time a short training run under each backend")
    args = parser.parse_args()
    bench_kernels()
    if args.end_to_end:
        bench_end_to_end()
