"""Scorer calls and relative cost as a function of beam size on fixed-length scenarios.

Prints CSV: mode,J,mean_scorer_calls,delta_c (against naive greedy decoding).
"""

import argparse
import csv
import sys

from triebias.decode import BiasConfig, cost_delta, decode
from triebias.synth import fixed_length_model, random_instance


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenarios", type=int, default=50)
    p.add_argument("--length", type=int, default=8, help="tokens before EOS")
    p.add_argument("--beams", type=int, nargs="+", default=[1, 2, 3, 4, 6, 8])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    cases = []
    for s in range(args.scenarios):
        inst = random_instance(args.seed + s)
        cases.append((fixed_length_model(inst.vocab_size, args.length, args.seed + s), inst.trie))

    def run(mode, J):
        cfg = BiasConfig(mode=mode, mu=3, beam_size=J, max_len=args.length + 4)
        return [decode(m, t, cfg, 0, 1) for m, t in cases]

    baseline = run("naive", 1)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["mode", "J", "mean_scorer_calls", "delta_c"])
    for mode in ("naive", "kstep"):
        for J in args.beams:
            res = run(mode, J)
            mean = sum(r.scorer_calls for r in res) / len(res)
            w.writerow([mode, J, f"{mean:.3f}", f"{cost_delta(res, baseline):.3f}"])


if __name__ == "__main__":
    main()
