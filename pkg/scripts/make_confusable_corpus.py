"""Write the synthetic confusable-family corpus and a sweep config.

    python3 scripts/make_confusable_corpus.py runs/corpus
    triebias sweep --config runs/corpus/config.json --out runs/sweep
"""

import argparse

from triebias.synth import make_confusable_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", help="output directory")
    p.add_argument("--pairs", type=int, default=60, help="confusable family pairs")
    p.add_argument("--members", type=int, default=3, help="words per family")
    p.add_argument("--utts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-confuse", type=float, default=0.5)
    p.add_argument("--n", type=int, nargs="+", default=[10, 50, 100])
    p.add_argument("--modes", nargs="+", default=["none", "naive", "naive_with_revocation", "kstep"])
    p.add_argument("--beams", type=int, nargs="+", default=[1])
    args = p.parse_args()

    corpus = make_confusable_corpus(args.pairs, args.members, args.utts, args.seed, args.p_confuse)
    path = corpus.write(args.out, seed=args.seed, n_values=args.n, modes=args.modes, beam_sizes=args.beams)
    n_conf = sum(corpus.confused.values())
    print(f"{len(corpus.families)} families, vocab {corpus.vocab.size}, "
          f"{len(corpus.models)} utterances ({n_conf} confused) -> {path}")


if __name__ == "__main__":
    main()
