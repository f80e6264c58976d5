"""Decode the Bonham/Bulan scenario under each biasing mode and beam size."""

from triebias.decode import MODES, BiasConfig, decode
from triebias.synth import BONHAM_MU, BONHAM_WORDS, bonham_model, bonham_vocab
from triebias.trie import build_trie
from triebias.vocab import detokenize


def main():
    v = bonham_vocab()
    model = bonham_model()
    trie = build_trie(v, BONHAM_WORDS)
    print(f"bias words: {', '.join(BONHAM_WORDS)}  (mu={BONHAM_MU})")
    print(f"{'mode':<24}{'J':>3}  {'output':<10}{'base_lp':>9}{'biased':>9}{'calls':>7}")
    for mode in MODES:
        for J in (1, 2):
            r = decode(model, trie, BiasConfig(mode=mode, mu=BONHAM_MU, beam_size=J), v.bos_id, v.eos_id)
            print(f"{mode:<24}{J:>3}  {detokenize(v, r.tokens):<10}{r.base_lp:>9.3f}"
                  f"{r.biased_score:>9.3f}{r.scorer_calls:>7}")


if __name__ == "__main__":
    main()
