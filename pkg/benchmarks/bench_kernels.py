"""Time the round kernel on both backends.

    python benchmarks/bench_kernels.py [--rounds N] [--repeat R]

Runs identical inputs through every available backend, checks the outputs
agree, and reports the best-of-R wall time and the speedup over pure Python.
"""
import argparse
import time

import numpy as np

from sqkd import kernels
from sqkd.adversary import EntangleMeasureAttack, InterceptResendAttack, NoAttack
from sqkd.quantum import basis_stack


def make_inputs(rounds: int, seed: int):
    rng = np.random.default_rng(seed)
    return dict(
        basis_idx=rng.integers(0, 4, rounds).astype(np.int64),
        labels=rng.integers(0, 4, rounds).astype(np.int64),
        sift=rng.random(rounds) < 0.5,
        uniforms=rng.random((rounds, 3)),
    )


def time_backend(name, attack, inputs, repeat):
    intercept = attack.intercept_basis.index if attack.intercept_basis is not None else -1
    fwd = np.eye(attack.joint_dim, dtype=complex) if intercept >= 0 else attack.forward_matrix
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernels.run_rounds(basis_stack(), inputs["basis_idx"], inputs["labels"], inputs["sift"],
                                 inputs["uniforms"], fwd, attack.backward_matrix,
                                 attack.initial_probe.amps, intercept, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    inputs = make_inputs(args.rounds, args.seed)
    attacks = [NoAttack(), EntangleMeasureAttack(0.7, 0.3), InterceptResendAttack()]
    print(f"rounds={args.rounds} repeat={args.repeat} backends={', '.join(backends)}")
    print(f"{'attack':<18}{'backend':<10}{'seconds':>10}{'rounds/s':>14}{'speedup':>10}")
    for attack in attacks:
        times, outputs = {}, {}
        for name in backends:
            times[name], outputs[name] = time_backend(name, attack, inputs, args.repeat)
        ref = outputs["python"]
        for name in backends:
            same = all(np.array_equal(a, b) if a.dtype.kind == "i" else np.allclose(a, b, atol=1e-12)
                       for a, b in zip(outputs[name], ref))
            if not same:
                raise SystemExit(f"{name} output differs from python for {attack.name}")
            speedup = times["python"] / times[name]
            print(f"{attack.name:<18}{name:<10}{times[name]:>10.4f}{args.rounds / times[name]:>14.0f}"
                  f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
