"""Command-line entry point and sweep harness.

    triebias <command> --config CONFIG.json [--out DIR] [--seed N] [--jobs N] [--trace]

Commands: build-trie, gen-biaslist, decode, eval, sweep, oracle-check.
Exit codes: 0 ok, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import biaslist as bl
from .decode import BiasConfig, ConfigError, DecodeResult, decode, write_trace
from .metrics import EvalReport, evaluate, join_by_id, normalize_text
from .scorer import ScenarioModel, load_scenario_set
from .trie import build_trie, load_bias_words
from .vocab import Vocabulary, detokenize, load_vocab

log = logging.getLogger("triebias")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
SWEEP_COLUMNS = ("mode", "N", "J", "wer", "bwer", "uwer", "mean_scorer_calls", "delta_c")
_PATH_KEYS = ("vocab", "scenarios", "references", "train_references", "rare_pool",
              "common_words", "bias_words", "bias_lists", "hyps")


class ValidationError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, utt_id: Optional[str], cause: BaseException):
        where = f"utterance {utt_id}, " if utt_id is not None else ""
        super().__init__(f"{where}stage {stage}: {type(cause).__name__}: {cause}")


@dataclass
class ExperimentConfig:
    vocab: Optional[Path] = None
    scenarios: Optional[Path] = None
    references: Optional[Path] = None
    train_references: Optional[Path] = None
    rare_pool: Optional[Path] = None
    common_words: Optional[Path] = None
    bias_words: Optional[Path] = None
    bias_lists: Optional[Path] = None
    hyps: Optional[Path] = None
    prefix_space: bool = False
    seed: int = 0
    n: int = 100
    decode: BiasConfig = field(default_factory=BiasConfig)
    sweep_n: Tuple[int, ...] = (10, 50, 100)
    sweep_modes: Tuple[str, ...] = ("naive", "kstep")
    sweep_beam_sizes: Tuple[int, ...] = (1,)
    out: Path = Path("out")

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} | {"sweep"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key in _PATH_KEYS:
            if d.get(key) is not None:
                kw[key] = (base / d[key]).resolve()
        for key in ("prefix_space", "seed", "n"):
            if key in d:
                kw[key] = d[key]
        if "out" in d:
            kw["out"] = (base / d["out"]).resolve()
        try:
            kw["decode"] = BiasConfig(**d.get("decode", {}))
        except (TypeError, ConfigError) as e:
            raise ValidationError(f"bad decode settings: {e}") from e
        sweep = d.get("sweep", {})
        for key, name in (("n", "sweep_n"), ("modes", "sweep_modes"), ("beam_sizes", "sweep_beam_sizes")):
            if key in sweep:
                kw[name] = tuple(sweep[key])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(d, base=path.parent)

    def require(self, *keys: str) -> None:
        for key in keys:
            p = getattr(self, key)
            if p is None:
                raise ValidationError(f"config is missing {key!r}")
            if not Path(p).exists():
                raise ValidationError(f"{key}: {p} does not exist")

    def validate_sweep(self) -> None:
        for name in ("sweep_n", "sweep_modes", "sweep_beam_sizes"):
            if not getattr(self, name):
                raise ValidationError(f"sweep axis {name[6:]!r} is empty")
        for mode in self.sweep_modes:
            try:
                replace(self.decode, mode=mode)
            except ConfigError as e:
                raise ValidationError(str(e)) from e
        if any(j < 1 for j in self.sweep_beam_sizes) or any(n < 0 for n in self.sweep_n):
            raise ValidationError("beam sizes must be >= 1 and N >= 0")

    def snapshot(self) -> dict:
        """Everything that affects results; paths by content hash, not location."""
        d = {}
        for key in _PATH_KEYS:
            p = getattr(self, key)
            d[key] = None if p is None or not Path(p).exists() else _file_hash(p)
        d.update(prefix_space=self.prefix_space, seed=self.seed, n=self.n, decode=asdict(self.decode),
                 sweep_n=list(self.sweep_n), sweep_modes=list(self.sweep_modes),
                 sweep_beam_sizes=list(self.sweep_beam_sizes))
        return d

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.snapshot(), sort_keys=True).encode()).hexdigest()


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_refs(path) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[str(rec["id"])] = rec["ref"] if "ref" in rec else rec["hyp"]
            except (json.JSONDecodeError, KeyError) as e:
                raise ValidationError(f"{path}:{lineno}: {e}") from e
    return out


# -- stages -----------------------------------------------------------------

@dataclass
class Inputs:
    vocab: Vocabulary
    models: Dict[str, ScenarioModel]
    refs: Dict[str, str] = field(default_factory=dict)


def _load_inputs(cfg: ExperimentConfig, need_refs: bool) -> Inputs:
    cfg.require("vocab", "scenarios")
    try:
        vocab = load_vocab(cfg.vocab)
        models = load_scenario_set(cfg.scenarios)
    except (ValueError, OSError) as e:
        raise ValidationError(str(e)) from e
    refs = {}
    if need_refs or cfg.references is not None:
        cfg.require("references")
        refs = _read_refs(cfg.references)
    for uid, m in models.items():
        if m.vocab_size != vocab.size:
            raise ValidationError(f"scenario {uid}: vocab_size {m.vocab_size} != V={vocab.size}")
    return Inputs(vocab, models, refs)


def _rare_pool(cfg: ExperimentConfig) -> Tuple[bl.RareWordPool, set]:
    cfg.require("common_words")
    common = bl.load_word_list(cfg.common_words)
    if cfg.rare_pool is not None:
        cfg.require("rare_pool")
        return bl.RareWordPool(tuple(sorted(bl.load_word_list(cfg.rare_pool)))), common
    cfg.require("train_references")
    train = _read_refs(cfg.train_references)
    return bl.extract_rare((normalize_text(t) for t in train.values()), common), common


def generate_bias_lists(cfg: ExperimentConfig, refs: Dict[str, str], n: int) -> List[bl.UtteranceBiasList]:
    pool, common = _rare_pool(cfg)
    log.info("rare-word pool: %d words", len(pool))
    return [bl.make_bias_list(uid, normalize_text(text), pool, n, cfg.seed, common) for uid, text in refs.items()]


def _bias_map(cfg: ExperimentConfig, inputs: Inputs, n: int) -> Dict[str, List[str]]:
    if cfg.bias_lists is not None:
        cfg.require("bias_lists")
        return bl.read_bias_lists(cfg.bias_lists)
    if not inputs.refs:
        raise ValidationError("need either 'bias_lists' or 'references' to build bias lists")
    return {b.id: b.bias for b in generate_bias_lists(cfg, inputs.refs, n)}


def _decode_one(task):
    uid, model, vocab, words, bias_cfg, prefix_space, want_trace = task
    try:
        trie = build_trie(vocab, words, prefix_space=prefix_space)
    except ValueError as e:
        raise StageError("build-trie", uid, e) from e
    rows = [] if want_trace else None
    try:
        res = decode(model, trie, bias_cfg, vocab.bos_id, vocab.eos_id, trace=rows)
    except Exception as e:
        raise StageError("decode", uid, e) from e
    rec = {
        "id": uid,
        "hyp": detokenize(vocab, res.tokens).strip(),
        "base_lp": res.base_lp,
        "biased_score": res.biased_score,
        "scorer_calls": res.scorer_calls,
        "completed_bias_words": [[trie.words[w], pos] for w, pos in res.completed_bias_words],
    }
    return rec, rows


def decode_all(inputs: Inputs, bias: Dict[str, List[str]], bias_cfg: BiasConfig, prefix_space: bool,
               jobs: int = 1, trace: bool = False) -> Tuple[List[dict], List[dict]]:
    """Decode every utterance in scenario order; output order never depends on ``jobs``."""
    missing = [uid for uid in inputs.models if uid not in bias]
    if missing:
        raise ValidationError(f"no bias list for utterances: {missing}")
    tasks = [(uid, m, inputs.vocab, bias[uid], bias_cfg, prefix_space, trace) for uid, m in inputs.models.items()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(_decode_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outs = [_decode_one(t) for t in tasks]
    recs = [r for r, _ in outs]
    rows = [{"utt_id": r["id"], **row} for r, t in outs for row in (t or [])]
    return recs, rows


def evaluate_records(hyps: Dict[str, str], refs: Dict[str, str], bias: Dict[str, Sequence[str]]) -> EvalReport:
    try:
        ids = join_by_id(hyps, refs, bias)
    except KeyError as e:
        raise ValidationError(e.args[0]) from e
    return evaluate([normalize_text(refs[i]) for i in ids], [normalize_text(hyps[i]) for i in ids],
                    [bias[i] for i in ids])


def _write_jsonl(path: Path, recs) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in recs:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def _write_report(report: EvalReport, stem: Path) -> None:
    stem.with_suffix(".json").write_text(report.to_json() + "\n", encoding="utf-8")
    stem.with_suffix(".tsv").write_text(report.tsv_header() + "\n" + report.to_tsv() + "\n", encoding="utf-8")


# -- commands ---------------------------------------------------------------

def cmd_build_trie(cfg: ExperimentConfig, args) -> int:
    cfg.require("vocab", "bias_words")
    try:
        vocab = load_vocab(cfg.vocab)
        words = load_bias_words(cfg.bias_words)
        trie = build_trie(vocab, words, prefix_space=cfg.prefix_space)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    cfg.out.mkdir(parents=True, exist_ok=True)
    trie.dump_csv(cfg.out / "trie.csv")
    print(f"{len(words)} words, {len(trie.nodes)} nodes, {trie.num_terminals} terminals -> {cfg.out / 'trie.csv'}")
    return EXIT_OK


def cmd_gen_biaslist(cfg: ExperimentConfig, args) -> int:
    cfg.require("references")
    refs = _read_refs(cfg.references)
    lists = generate_bias_lists(cfg, refs, cfg.n)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "biaslists.jsonl"
    bl.write_bias_lists(lists, path)
    print(f"{len(lists)} bias lists (N={cfg.n}, seed={cfg.seed}) -> {path}")
    return EXIT_OK


def cmd_decode(cfg: ExperimentConfig, args) -> int:
    inputs = _load_inputs(cfg, need_refs=False)
    bias = _bias_map(cfg, inputs, cfg.n)
    recs, rows = decode_all(inputs, bias, cfg.decode, cfg.prefix_space, args.jobs, args.trace)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_jsonl(cfg.out / "hyps.jsonl", recs)
    if args.trace:
        write_trace(rows, cfg.out / "trace.csv", extra=("utt_id",))
    print(f"decoded {len(recs)} utterances -> {cfg.out / 'hyps.jsonl'}")
    return EXIT_OK


def cmd_eval(cfg: ExperimentConfig, args) -> int:
    cfg.require("references")
    hyps_path = cfg.hyps or cfg.out / "hyps.jsonl"
    if not Path(hyps_path).exists():
        raise ValidationError(f"hyps: {hyps_path} does not exist")
    hyps = _read_refs(hyps_path)
    refs = _read_refs(cfg.references)
    if cfg.bias_lists is not None:
        cfg.require("bias_lists")
        bias = bl.read_bias_lists(cfg.bias_lists)
    else:
        bias = {b.id: b.bias for b in generate_bias_lists(cfg, refs, cfg.n)}
    report = evaluate_records(hyps, refs, bias)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_report(report, cfg.out / "report")
    print(report.tsv_header())
    print(report.to_tsv())
    return EXIT_OK


def _fmt(x) -> str:
    return "null" if x is None else f"{x:.6f}"


def run_sweep(cfg: ExperimentConfig, jobs: int = 1, cells_dir: Optional[Path] = None) -> Tuple[str, List[dict]]:
    """Run the (mode, N, J) cross product; returns CSV text and per-cell records."""
    cfg.validate_sweep()
    inputs = _load_inputs(cfg, need_refs=True)
    max_n = max(cfg.sweep_n)
    if cfg.bias_lists is not None:
        raise ValidationError("sweep draws its own bias lists; remove 'bias_lists' from the config")
    full = {b.id: b for b in generate_bias_lists(cfg, inputs.refs, max_n)}

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    cells = []
    for n in cfg.sweep_n:
        bias = {uid: [*b.true_rare, *b.distractors[:n]] for uid, b in full.items()}
        baseline_calls = None
        for mode, J in itertools.product(cfg.sweep_modes, cfg.sweep_beam_sizes):
            bias_cfg = replace(cfg.decode, mode=mode, beam_size=J)
            try:
                recs, _ = decode_all(inputs, bias, bias_cfg, cfg.prefix_space, jobs)
                if baseline_calls is None:
                    base_cfg = replace(cfg.decode, mode="naive", beam_size=1)
                    if (mode, J) == ("naive", 1):
                        base = recs
                    else:
                        base, _ = decode_all(inputs, bias, base_cfg, cfg.prefix_space, jobs)
                    baseline_calls = sum(r["scorer_calls"] for r in base)
                report = evaluate_records({r["id"]: r["hyp"] for r in recs}, inputs.refs, bias)
            except (StageError, ValidationError) as e:
                log.error("cell mode=%s N=%d J=%d failed: %s", mode, n, J, e)
                w.writerow([mode, n, J] + ["failed"] * 5)
                cells.append({"mode": mode, "N": n, "J": J, "status": "failed", "error": str(e)})
                continue
            calls = sum(r["scorer_calls"] for r in recs)
            mean_calls = calls / len(recs)
            delta_c = calls / baseline_calls - 1.0
            w.writerow([mode, n, J, _fmt(report.wer.rate), _fmt(report.bwer.rate), _fmt(report.uwer.rate),
                        _fmt(mean_calls), _fmt(delta_c)])
            cells.append({"mode": mode, "N": n, "J": J, "status": "ok", "report": report.to_dict(),
                          "mean_scorer_calls": mean_calls, "delta_c": delta_c})
            if cells_dir is not None:
                cells_dir.mkdir(parents=True, exist_ok=True)
                _write_report(report, cells_dir / f"{mode}_N{n}_J{J}")
    return buf.getvalue(), cells


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    start = time.perf_counter()
    text, cells = run_sweep(cfg, args.jobs, cells_dir=cfg.out / "cells")
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "sweep.csv").write_text(text, encoding="utf-8")
    record = {"config_hash": cfg.hash(), "cells": cells, "wall_clock_s": time.perf_counter() - start}
    (cfg.out / "runs.json").write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(text)
    failed = sum(c["status"] == "failed" for c in cells)
    if failed:
        log.error("%d sweep cell(s) failed", failed)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_oracle_check(cfg: Optional[ExperimentConfig], args) -> int:
    from . import oracle

    ok = True
    for name, passed, detail in oracle.run_all(seed=args.seed or 0, cases=args.cases):
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_RUNTIME


COMMANDS = {
    "build-trie": cmd_build_trie,
    "gen-biaslist": cmd_gen_biaslist,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triebias", description="Trie-based contextual biasing with K-step prediction.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "oracle-check")
        sp.add_argument("--out", type=Path, help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, help="global seed (overrides config)")
        sp.add_argument("--jobs", type=int, default=1, help="utterance-level worker processes")
        sp.add_argument("--trace", action="store_true", help="write a per-step debug CSV")
        if name == "oracle-check":
            sp.add_argument("--cases", type=int, default=200)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = None
        if args.config is not None:
            cfg = ExperimentConfig.load(args.config)
            if args.out is not None:
                cfg.out = args.out
            if args.seed is not None:
                if not 0 <= args.seed < 2 ** 64:
                    raise ValidationError("--seed must be an unsigned 64-bit integer")
                cfg.seed = args.seed
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - any other failure is a runtime error
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
