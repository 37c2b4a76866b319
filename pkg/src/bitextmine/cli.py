"""Command-line interface: ``bitextmine <command> [options]``."""
import argparse
import json
import logging
import os
import sys
from dataclasses import fields

from .config import RunConfig
from .ingest.io import (
    extract_bins,
    iter_html_pages,
    read_documents,
    read_seed_corpus,
    write_documents,
    write_seed_corpus,
    bins_to_documents,
)
from .ingest.langid import load_profiles

log = logging.getLogger("bitextmine")

# flags whose name differs from the config field
_FLAG_NAMES = {"emb_iterations": "--iterations", "emb_lr": "--emb-lr"}
_HELP = {
    "max_tokens": "drop seed pairs with a side longer than this",
    "bin_size": "parallel documents per artificial bin",
    "dict_threshold": "minimum harmonic-mean weight of a dictionary entry",
    "null_weight": "weight used for dictionary misses when scoring",
    "emb_iterations": "skip-gram passes over the seed corpus",
    "weighting": "document vector term weights: tfidf or sum",
    "idf_scope": "idf statistics over all bins (global) or per bin",
    "search_nodes": "tree nodes inspected per nearest-neighbour query",
    "threshold": "accept pairs whose confidence is strictly above this",
    "workers": "worker processes for per-bin processing",
}


def _flag(name):
    return _FLAG_NAMES.get(name, "--" + name.replace("_", "-"))


def _add_config_flags(parser):
    group = parser.add_argument_group("parameters (override --config)")
    group.add_argument("--config", help="flat TOML file with parameter values")
    for f in fields(RunConfig):
        kind = type(f.default)
        group.add_argument(_flag(f.name), dest=f.name, type=kind, default=None,
                           help=f"{_HELP.get(f.name, f.name.replace('_', ' '))} (default {f.default})")
    group.add_argument("--swap", action="store_true",
                       help="run the opposite direction (swap source and target roles)")


def _config(args, base=None):
    cfg = base or RunConfig()
    if args.config:
        if not os.path.exists(args.config):
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg = cfg.updated(**RunConfig.read_file(args.config))
    cfg = cfg.updated(**{f.name: getattr(args, f.name) for f in fields(RunConfig)})
    if args.swap:
        cfg = cfg.updated(src_lang=cfg.tgt_lang, tgt_lang=cfg.src_lang)
    return cfg.validate()


def _require(path, what):
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")


def _read_seed(args):
    _require(args.seed_corpus, "seed corpus")
    if args.target_file:
        _require(args.target_file, "seed corpus target file")
    raw = read_seed_corpus(args.seed_corpus, args.target_file)
    if args.swap:
        raw = [(t, s) for s, t in raw]
    return raw


def cmd_train(args):
    from .pipeline import train_all

    cfg = _config(args)
    artifacts = train_all(_read_seed(args), cfg, args.out)
    rep = artifacts.training_report
    print(f"artifacts written to {args.out}")
    print(f"training realignment: exact match preliminary {rep.exact_match_preliminary:.4f}, "
          f"scored {rep.exact_match_scored:.4f}")


def cmd_align(args):
    from .pipeline import Artifacts, align, write_candidates, write_corpus, write_refined

    _require(args.dataset, "dataset")
    _require(args.artifacts, "artifacts directory")
    artifacts = Artifacts.load(args.artifacts)
    cfg = _config(args, artifacts.config)
    if (cfg.src_lang, cfg.tgt_lang) != (artifacts.config.src_lang, artifacts.config.tgt_lang):
        raise ValueError(f"artifacts were trained for {artifacts.config.src_lang}->"
                         f"{artifacts.config.tgt_lang}, not {cfg.src_lang}->{cfg.tgt_lang}")
    docs = read_documents(args.dataset)
    result = align(docs, artifacts, cfg)
    write_refined(result.refined, args.out)
    if args.corpus_out:
        write_corpus(result.refined, docs, args.corpus_out)
    if args.candidates_dir:
        os.makedirs(args.candidates_dir, exist_ok=True)
        write_candidates(result.results, os.path.join(args.candidates_dir, "preliminary.tsv"), "preliminary")
        write_candidates(result.results, os.path.join(args.candidates_dir, "scored.tsv"), "scored")
    with open(os.path.splitext(args.out)[0] + ".timings.json", "w", encoding="utf-8") as f:
        json.dump(result.timings, f, indent=1)
    print(f"{len(result.refined)} pairs accepted in {len(result.bins)} bins -> {args.out}")


def cmd_evaluate(args):
    from .pipeline import evaluate, read_gold, read_refined, read_top_candidates

    for path, what in ((args.refined, "refined alignments"), (args.gold, "gold pairs")):
        _require(path, what)
    prelim = read_top_candidates(args.preliminary) if args.preliminary else None
    scored = read_top_candidates(args.scored) if args.scored else None
    report = evaluate(read_refined(args.refined), read_gold(args.gold),
                      preliminary=prelim, scored=scored)
    text = json.dumps(report.to_json(), indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)


def cmd_realign(args):
    from .pipeline import realign_experiment

    cfg = _config(args)
    report, _, _ = realign_experiment(_read_seed(args), cfg, args.work_dir, args.tail_bin_size)
    print(json.dumps({k: v for k, v in report.to_json().items() if k != "per_bin"}, indent=1))


def cmd_extract(args):
    _require(args.input, "HTML input")
    _require(args.profiles, "language profiles")
    cfg = _config(args)
    ppath = args.profiles
    if os.path.isdir(ppath):
        ppath = os.path.join(ppath, "profiles.json")
    profiles = load_profiles(ppath)
    kept, all_bins = extract_bins(iter_html_pages(args.input), profiles, cfg.src_lang, cfg.tgt_lang,
                                  cfg.min_paragraph_chars, cfg.ratio_low, cfg.ratio_high)
    write_documents(bins_to_documents(kept), args.out)
    for b in all_bins:
        status = "kept" if b in kept else "dropped"
        print(f"{b.id}\t{len(b.source_docs)} {cfg.src_lang}\t{len(b.target_docs)} {cfg.tgt_lang}\t{status}")


def cmd_make_corpus(args):
    from .synthetic import mini_corpus

    write_seed_corpus(mini_corpus(args.pairs, args.corpus_seed), args.out)
    print(f"{args.pairs} synthetic pairs -> {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="bitextmine",
                                description="Mine parallel paragraph pairs from binned bilingual documents.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="seed corpus -> artifacts")
    t.add_argument("--seed-corpus", required=True, help="TSV of source<TAB>target, or the source side file")
    t.add_argument("--target-file", help="target side file when --seed-corpus is one side only")
    t.add_argument("--out", required=True, help="artifacts directory")
    _add_config_flags(t)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("align", help="dataset + artifacts -> refined alignments TSV")
    a.add_argument("--dataset", required=True, help="TSV of bin_id, lang, doc_id, text")
    a.add_argument("--artifacts", required=True)
    a.add_argument("--out", required=True, help="refined alignments TSV")
    a.add_argument("--corpus-out", help="also write bin, source text, target text, confidence")
    a.add_argument("--candidates-dir", help="also write preliminary.tsv and scored.tsv here")
    _add_config_flags(a)
    a.set_defaults(func=cmd_align)

    e = sub.add_parser("evaluate", help="refined alignments + gold -> JSON report")
    e.add_argument("--refined", required=True)
    e.add_argument("--gold", required=True, help="TSV of bin_id, source_id, target_id")
    e.add_argument("--preliminary", help="preliminary candidate TSV from align --candidates-dir")
    e.add_argument("--scored", help="scored candidate TSV from align --candidates-dir")
    e.add_argument("--out", help="write the JSON report here as well")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("realign-experiment", help="train on the head of a seed corpus, realign the tail")
    r.add_argument("--seed-corpus", required=True)
    r.add_argument("--target-file")
    r.add_argument("--work-dir", required=True)
    r.add_argument("--tail-bin-size", type=int, help="bin size for the realigned tail (default: --bin-size)")
    _add_config_flags(r)
    r.set_defaults(func=cmd_realign)

    x = sub.add_parser("extract-paragraphs", help="HTML pages -> binned paragraph dataset")
    x.add_argument("--input", required=True, help="directory of <domain>/<page>.html or TSV of domain, url, html")
    x.add_argument("--profiles", required=True, help="profiles.json or an artifacts directory")
    x.add_argument("--out", required=True, help="dataset TSV")
    _add_config_flags(x)
    x.set_defaults(func=cmd_extract)

    m = sub.add_parser("make-corpus", help="write the synthetic desk-scale seed corpus")
    m.add_argument("--out", required=True)
    m.add_argument("--pairs", type=int, default=40000)
    m.add_argument("--corpus-seed", type=int, default=11)
    m.set_defaults(func=cmd_make_corpus)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError) as exc:
        print(f"bitextmine: error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"bitextmine: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
