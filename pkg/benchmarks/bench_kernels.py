"""Compare the compiled and numpy fractional-delay kernels.

    python3 benchmarks/bench_kernels.py [--images 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from rotsteer import _kernels_py

try:
    from rotsteer import _kernels
except ImportError:
    _kernels = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--images", type=int, default=20000)
    ap.add_argument("--length", type=int, default=4800)
    ap.add_argument("--half-width", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    delays = rng.uniform(0, args.length, args.images)
    gains = rng.normal(size=(args.images, 4))
    backends = {"python": _kernels_py.accumulate_fractional_delays}
    if _kernels is not None:
        backends["cython"] = _kernels.accumulate_fractional_delays
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    times, outs = {}, {}
    for name, fn in backends.items():
        def call():
            out = np.zeros((args.length, 4))
            fn(out, delays, gains, args.half_width)
            return out
        outs[name] = call()
        times[name] = min(timeit.repeat(call, number=1, repeat=args.repeat))
        print(f"{name:>7}: {times[name] * 1e3:9.2f} ms  "
              f"({args.images / times[name] / 1e6:.2f} M images/s)")
    if len(times) == 2:
        err = np.max(np.abs(outs["python"] - outs["cython"]))
        print(f"speed-up: {times['python'] / times['cython']:.1f}x   max |diff|: {err:.2e}")


if __name__ == "__main__":
    main()
