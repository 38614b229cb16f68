"""Times the compiled kernel extension against the pure-numpy fallback.

Measures a forward+backward pass through a critic-shaped network and a
batch of Adam steps; reports best-of-`repeats` wall time per backend.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --batch 4096 --hidden 512,512
"""

import argparse
import time

import numpy as np

from dafs.nn import MLP, Activation, Adam, backend
from dafs.nn import ParamVector  # noqa: F401  (re-exported for interactive use)


def build_net(state_dim, hidden, rng):
    sizes = [state_dim] + list(hidden) + [1]
    acts = [Activation.TANH] * len(hidden) + [Activation.IDENTITY]
    return MLP(sizes, acts, rng=rng, name="bench")


def time_pass(net, opt, x, d_out, inner, repeats):
    best_fb = best_adam = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            net.pv.grad[:] = 0.0
            net.forward(x)
            net.backward(d_out)
        t1 = time.perf_counter()
        for _ in range(inner):
            opt.step()
        t2 = time.perf_counter()
        best_fb = min(best_fb, (t1 - t0) / inner)
        best_adam = min(best_adam, (t2 - t1) / inner)
    return best_fb, best_adam


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=2048)
    ap.add_argument("--hidden", default="512,512",
                    help="comma-separated hidden layer widths")
    ap.add_argument("--state-dim", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--inner", type=int, default=10,
                    help="iterations averaged inside each repeat")
    args = ap.parse_args()

    hidden = tuple(int(w) for w in args.hidden.split(",") if w.strip())
    rng = np.random.default_rng(0)
    x = rng.normal(size=(args.batch, args.state_dim))
    d_out = rng.normal(size=(args.batch, 1))

    names = backend.available()
    print(f"backends: {', '.join(names)}  (active default: {backend.active_name()})")
    print(f"net {args.state_dim}-{'-'.join(map(str, hidden))}-1, batch {args.batch}")
    print()
    print(f"{'backend':>10}  {'fwd+bwd ms':>12}  {'adam ms':>10}")

    results = {}
    for name in names:
        with backend.use(name):
            net = build_net(args.state_dim, hidden, np.random.default_rng(1))
            opt = Adam(net.pv, 1e-3)
            net.forward(x)  # warm up caches and allocator
            net.backward(d_out)
            net.pv.grad[:] = 0.0
            fb, ad = time_pass(net, opt, x, d_out, args.inner, args.repeats)
        results[name] = (fb, ad)
        print(f"{name:>10}  {fb * 1e3:>12.3f}  {ad * 1e3:>10.3f}")

    if len(results) == 2:
        py = results.get("python")
        comp = results.get("compiled")
        if py and comp:
            print()
            print(f"speedup (fwd+bwd): {py[0] / comp[0]:.2f}x")
            print(f"speedup (adam):    {py[1] / comp[1]:.2f}x")
    elif "compiled" not in results:
        print("\ncompiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
