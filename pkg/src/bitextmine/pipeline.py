"""Training, application and evaluation of the whole mining pipeline.

Training part I turns a seed corpus into a dictionary, bilingual word
vectors and a length model. Training part II realigns the binned seed
corpus and fits the classifier on its top candidates. Application runs the
same per-bin procedure on new documents and keeps the top candidates the
classifier accepts. Bins are independent and may run in worker processes.
"""
import hashlib
import json
import logging
import math
import os
import shutil
import tempfile
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import classifier as clf
from .annindex import AnnIndex, SearchParams
from .config import RunConfig
from .embeddings import EmbeddingTable, normalize_for_embeddings, train_biskip
from .ingest import Document, Profile, SeedPair, clean_seed, gold_pairs, gold_partner, group_into_bins, make_bins
from .ingest.io import bins_to_documents, escape, preprocess_pairs
from .ingest.langid import load_profiles, save_profiles
from .scoring import (
    Candidate,
    CandidateList,
    LengthModel,
    fit_length_model,
    length_similarity,
    log_weight_similarity_counts,
)
from .vectorize import TfIdfModel, doc_vector, fit_tfidf
from .wordalign import SRC2TGT, TGT2SRC, Dictionary, align_corpus, build_dictionary, train_ibm1, write_alignments

log = logging.getLogger(__name__)

ARTIFACTS_FORMAT = "bitextmine-artifacts"
ARTIFACTS_VERSION = 1
PREPROCESSING = {"tokenizer": "unicode-words-and-punctuation", "lowercase": True,
                 "unicode_normalization": "NFC", "version": 1}
ARTIFACT_FILES = ("dictionary.tsv", "embeddings.vec", "length_model.json", "classifier.json",
                  "profiles.json", "tfidf_src.json", "tfidf_tgt.json", "word_alignment.txt",
                  "config.json")


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0
    log.info("%s: %.2fs", name, timings[name])


def bin_seed(seed, bin_id):
    digest = hashlib.sha256(f"{seed}:{bin_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little") % (2**31 - 1)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# -- artifacts -------------------------------------------------------------------

@dataclass
class Artifacts:
    dictionary: Dictionary
    embeddings: EmbeddingTable
    length_model: LengthModel
    classifier: clf.MlpModel
    profiles: list
    config: RunConfig
    tfidf_src: TfIdfModel = None
    tfidf_tgt: TfIdfModel = None
    alignments: list = None

    def save(self, out_dir):
        """Write every artifact plus a manifest into a fresh ``out_dir``.

        Files are assembled in a scratch directory next to ``out_dir`` and
        moved into place only when complete.
        """
        out_dir = os.path.abspath(out_dir)
        if os.path.exists(out_dir) and os.listdir(out_dir) and \
                not os.path.exists(os.path.join(out_dir, "manifest.json")):
            raise FileExistsError(f"{out_dir} exists and is not an artifacts directory")
        parent = os.path.dirname(out_dir)
        os.makedirs(parent, exist_ok=True)
        tmp = tempfile.mkdtemp(prefix=".partial-", dir=parent)
        try:
            p = lambda name: os.path.join(tmp, name)
            self.dictionary.save(p("dictionary.tsv"))
            self.embeddings.save(p("embeddings.vec"))
            _dump_json(self.length_model.to_json(), p("length_model.json"))
            self.classifier.save(p("classifier.json"))
            save_profiles(self.profiles, p("profiles.json"))
            _dump_json((self.tfidf_src or TfIdfModel(0, {})).to_json(), p("tfidf_src.json"))
            _dump_json((self.tfidf_tgt or TfIdfModel(0, {})).to_json(), p("tfidf_tgt.json"))
            write_alignments(self.alignments or [], p("word_alignment.txt"))
            _dump_json(self.config.to_dict(), p("config.json"))
            manifest = {
                "format": ARTIFACTS_FORMAT,
                "version": ARTIFACTS_VERSION,
                "preprocessing": PREPROCESSING,
                "config": self.config.to_dict(),
                "files": {name: sha256_file(p(name)) for name in ARTIFACT_FILES},
            }
            _dump_json(manifest, p("manifest.json"))
            if os.path.exists(out_dir):
                shutil.rmtree(out_dir)
            os.replace(tmp, out_dir)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return manifest

    @classmethod
    def load(cls, art_dir, verify=True):
        p = lambda name: os.path.join(art_dir, name)
        if not os.path.exists(p("manifest.json")):
            raise FileNotFoundError(f"no manifest.json in {art_dir}")
        with open(p("manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        if manifest.get("format") != ARTIFACTS_FORMAT or manifest.get("version") != ARTIFACTS_VERSION:
            raise ValueError(f"{art_dir}: unsupported artifacts format")
        if manifest.get("preprocessing") != PREPROCESSING:
            raise ValueError(f"{art_dir}: artifacts were trained with different preprocessing "
                             f"{manifest.get('preprocessing')}")
        if verify:
            for name, digest in manifest["files"].items():
                if sha256_file(p(name)) != digest:
                    raise ValueError(f"{art_dir}/{name} does not match its manifest hash")
        config = RunConfig.from_dict(manifest["config"])
        with open(p("length_model.json"), encoding="utf-8") as f:
            lm = json.load(f)
        with open(p("tfidf_src.json"), encoding="utf-8") as f:
            tfidf_src = TfIdfModel.from_json(json.load(f))
        with open(p("tfidf_tgt.json"), encoding="utf-8") as f:
            tfidf_tgt = TfIdfModel.from_json(json.load(f))
        return cls(
            dictionary=Dictionary.load(p("dictionary.tsv"), config.dict_threshold, config.null_weight),
            embeddings=EmbeddingTable.load(p("embeddings.vec")),
            length_model=LengthModel(lm["mu"], lm["sigma"]),
            classifier=clf.MlpModel.load(p("classifier.json")),
            profiles=load_profiles(p("profiles.json")),
            config=config,
            tfidf_src=tfidf_src,
            tfidf_tgt=tfidf_tgt,
        )


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=1, sort_keys=True)
        f.write("\n")


# -- per-bin alignment -------------------------------------------------------------

@dataclass
class TopCandidate:
    bin_id: str
    source_doc_id: str
    target_doc_id: str
    log_score: float
    features: np.ndarray
    confidence: float = None

    @property
    def score(self):
        return math.exp(self.log_score)


@dataclass
class BinResult:
    bin_id: str
    preliminary: list = field(default_factory=list)
    scored: list = field(default_factory=list)
    tops: list = field(default_factory=list)
    skipped: str = None


@dataclass
class _Context:
    dictionary: Dictionary
    embeddings: EmbeddingTable
    length_model: LengthModel
    model: object
    config: RunConfig
    tfidf_src: TfIdfModel
    tfidf_tgt: TfIdfModel


def process_bin(b, ctx):
    """Preliminary, scored and top-candidate alignments for one bin."""
    cfg = ctx.config
    result = BinResult(b.id)
    if not b.source_docs:
        return result
    if not b.target_docs:
        log.warning("bin %s has no target documents; skipped", b.id)
        result.skipped = "no target documents"
        return result
    src_norm = [normalize_for_embeddings(d.tokens) for d in b.source_docs]
    tgt_norm = [normalize_for_embeddings(d.tokens) for d in b.target_docs]
    if cfg.idf_scope == "bin":
        tfidf_src, tfidf_tgt = fit_tfidf(src_norm), fit_tfidf(tgt_norm)
    else:
        tfidf_src, tfidf_tgt = ctx.tfidf_src, ctx.tfidf_tgt
    emb = ctx.embeddings
    tgt_vecs = np.vstack([doc_vector(d.id, toks, tfidf_tgt, emb, cfg.tgt_lang, cfg.weighting).vector
                          for d, toks in zip(b.target_docs, tgt_norm)])
    if not np.any(tgt_vecs):
        log.warning("bin %s: every target vector is zero; skipped", b.id)
        result.skipped = "no target vectors"
        return result
    index = AnnIndex.build([d.id for d in b.target_docs], tgt_vecs, cfg.n_trees,
                           cfg.leaf_capacity, bin_seed(cfg.seed, b.id))
    if index.dim != emb.dim:
        raise ValueError(f"index dimension {index.dim} differs from embedding dimension {emb.dim}")
    params = SearchParams(cfg.k, cfg.search_nodes)

    tgt_by_id = {d.id: d for d in b.target_docs}
    tgt_counts = {d.id: Counter(d.tokens) for d in b.target_docs}
    skipped_src = []
    for d, toks in zip(b.source_docs, src_norm):
        dv = doc_vector(d.id, toks, tfidf_src, emb, cfg.src_lang, cfg.weighting)
        if dv.is_zero:
            skipped_src.append(d.id)
            continue
        hits = index.query(dv.vector, params)
        prelim = CandidateList(d.id, [Candidate(t, dist) for t, dist in hits])
        d_counts = Counter(d.tokens)
        rescored = []
        for rank, cand in enumerate(prelim.candidates):
            c = tgt_by_id[cand.doc_id]
            ls = length_similarity(d.tokens, c.tokens, ctx.length_model)
            if ls == 0.0 or not c.tokens:
                lsc = -math.inf
            else:
                lsc = math.log(ls) + log_weight_similarity_counts(
                    d_counts, tgt_counts[cand.doc_id], len(c.tokens), ctx.dictionary)
            rescored.append((-lsc, rank, Candidate(cand.doc_id, cand.distance, lsc)))
        rescored.sort(key=lambda x: (x[0], x[1]))
        scored = CandidateList(d.id, [c for _, _, c in rescored])
        result.preliminary.append(prelim)
        result.scored.append(scored)
        top = scored.top
        feats = clf.features(d.tokens, tgt_by_id[top.doc_id].tokens, ctx.length_model, ctx.dictionary)
        conf = clf.classify(ctx.model, feats) if ctx.model is not None else None
        result.tops.append(TopCandidate(b.id, d.id, top.doc_id, top.log_score, feats, conf))
    if skipped_src:
        log.info("bin %s: %d source documents with zero vectors not queried: %s", b.id,
                 len(skipped_src), ", ".join(skipped_src[:20]))
    return result


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _process_in_worker(b):
    return process_bin(b, _WORKER_CTX)


def process_bins(bins, ctx, workers=1):
    """Process bins in order; results are returned in input order."""
    if workers <= 1 or len(bins) <= 1:
        return [process_bin(b, ctx) for b in bins]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as ex:
        return list(ex.map(_process_in_worker, bins))


def _global_tfidf(bins, cfg):
    src = [normalize_for_embeddings(d.tokens) for b in bins for d in b.source_docs]
    tgt = [normalize_for_embeddings(d.tokens) for b in bins for d in b.target_docs]
    return (fit_tfidf(src) if src else TfIdfModel(0, {}),
            fit_tfidf(tgt) if tgt else TfIdfModel(0, {}))


# -- training --------------------------------------------------------------------

def prepare_seed(raw_pairs, config, max_tokens="config"):
    """Preprocess and clean raw seed pairs."""
    pairs = preprocess_pairs(raw_pairs)
    limit = config.max_tokens if max_tokens == "config" else max_tokens
    return clean_seed(pairs, limit, require_letter=True)


def train_part1(pairs, config, timings):
    with stage("ibm1 src2tgt", timings):
        fwd = train_ibm1(pairs, config.ibm_iterations, SRC2TGT)
    with stage("ibm1 tgt2src", timings):
        rev = train_ibm1(pairs, config.ibm_iterations, TGT2SRC)
    with stage("word alignment", timings):
        alignments = align_corpus(pairs, fwd, rev)
    with stage("dictionary", timings):
        dictionary = build_dictionary(fwd, rev, config.dict_threshold, config.null_weight)
        log.info("dictionary: %d entries", len(dictionary))
    with stage("embeddings", timings):
        norm = [SeedPair(tuple(normalize_for_embeddings(p.src)), tuple(normalize_for_embeddings(p.tgt)))
                for p in pairs]
        emb = train_biskip(norm, alignments, config.src_lang, config.tgt_lang, config.dim,
                           config.emb_iterations, config.window, config.negatives, config.emb_lr,
                           config.seed)
    with stage("length model", timings):
        length_model = fit_length_model(pairs)
    return dictionary, emb, length_model, alignments


def train_part2(pairs, dictionary, emb, length_model, config, timings):
    """Realign the binned seed corpus and fit the classifier on top candidates."""
    with stage("binning", timings):
        bins = make_bins(pairs, config.bin_size, config.src_lang, config.tgt_lang)
    with stage("document vectors (idf)", timings):
        tfidf_src, tfidf_tgt = _global_tfidf(bins, config)
    ctx = _Context(dictionary, emb, length_model, None, config, tfidf_src, tfidf_tgt)
    with stage("realignment", timings):
        results = process_bins(bins, ctx, config.workers)
    with stage("classifier", timings):
        items = [(t.source_doc_id, t.features, gold_partner(t.source_doc_id) == t.target_doc_id)
                 for r in results for t in r.tops]
        examples = clf.build_dataset(items, config.sample_fraction, config.seed)
        model = clf.train(examples, config.epochs, config.learning_rate, config.seed)
    report = evaluate([], gold_pairs(bins), results)
    return model, tfidf_src, tfidf_tgt, report


def train_all(raw_pairs, config, out_dir=None):
    """Both training parts; artifacts are written to ``out_dir`` when given."""
    config.validate()
    timings = {}
    with stage("preprocess and clean", timings):
        pairs = prepare_seed(raw_pairs, config)
        if len(pairs) < 2:
            raise ValueError(f"only {len(pairs)} usable seed pairs after cleaning")
        profiles = [Profile.train(config.src_lang, (s for s, _ in raw_pairs)),
                    Profile.train(config.tgt_lang, (t for _, t in raw_pairs))]
    dictionary, emb, length_model, alignments = train_part1(pairs, config, timings)
    model, tfidf_src, tfidf_tgt, report = train_part2(pairs, dictionary, emb, length_model, config, timings)
    artifacts = Artifacts(dictionary, emb, length_model, model, profiles, config, tfidf_src, tfidf_tgt,
                          alignments)
    if out_dir is not None:
        with stage("save artifacts", timings):
            artifacts.save(out_dir)
            _dump_json({"timings": timings, "training_realignment": report.to_json()},
                       os.path.join(out_dir, "training_report.json"))
    artifacts.timings = timings
    artifacts.training_report = report
    return artifacts


# -- application -----------------------------------------------------------------

@dataclass
class RefinedRecord:
    bin_id: str
    source_doc_id: str
    target_doc_id: str
    score: float
    confidence: float


@dataclass
class AlignResult:
    refined: list
    bins: list
    results: list
    timings: dict


def align(docs, artifacts, config=None):
    """Refined alignments for raw documents (preprocessed here like the seed corpus)."""
    config = (config or artifacts.config).validate()
    if artifacts.embeddings.dim != config.dim:
        raise ValueError(f"embedding dimension {artifacts.embeddings.dim} differs from config dim {config.dim}")
    timings = {}
    with stage("preprocess", timings):
        docs = [d if d.tokens else d.preprocessed() for d in docs]
        bins = group_into_bins(docs, config.src_lang, config.tgt_lang)
    with stage("document vectors (idf)", timings):
        tfidf_src, tfidf_tgt = _global_tfidf(bins, config)
    ctx = _Context(artifacts.dictionary, artifacts.embeddings, artifacts.length_model,
                   artifacts.classifier, config, tfidf_src, tfidf_tgt)
    with stage("align bins", timings):
        results = process_bins(bins, ctx, config.workers)
    refined = [RefinedRecord(t.bin_id, t.source_doc_id, t.target_doc_id, t.score, t.confidence)
               for r in results for t in r.tops if clf.accept(t.confidence, config.threshold)]
    return AlignResult(refined, bins, results, timings)


# -- evaluation ------------------------------------------------------------------

@dataclass
class EvalReport:
    exact_match_preliminary: float
    exact_match_scored: float
    recall: float
    precision: float
    n_gold: int
    n_accepted: int
    per_bin: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "exact_match_preliminary": self.exact_match_preliminary,
            "exact_match_scored": self.exact_match_scored,
            "recall": self.recall,
            "precision": self.precision,
            "n_gold": self.n_gold,
            "n_accepted": self.n_accepted,
            "per_bin": self.per_bin,
            "timings": self.timings,
        }


def _exact_tops(lists_by_bin):
    return {(bin_id, cl.source_doc_id, cl.top.doc_id)
            for bin_id, lists in lists_by_bin for cl in lists if cl.top is not None}


def evaluate(refined, gold, results=None, preliminary=None, scored=None, timings=None):
    """Recall/precision of ``refined`` and exact-match@1 of candidate lists.

    Candidate lists come from ``results`` (BinResult objects) or directly as
    sets of (bin_id, source_id, top_target_id) triples.
    """
    gold = {tuple(g) for g in gold}
    if not gold:
        raise ValueError("gold pairing is empty")
    accepted = {(r.bin_id, r.source_doc_id, r.target_doc_id) for r in refined}
    if results is not None:
        preliminary = _exact_tops((r.bin_id, r.preliminary) for r in results)
        scored = _exact_tops((r.bin_id, r.scored) for r in results)
    preliminary = preliminary or set()
    scored = scored or set()
    hit = accepted & gold
    per_bin = {}
    for b in sorted({g[0] for g in gold} | {a[0] for a in accepted}):
        g_b = {g for g in gold if g[0] == b}
        a_b = {a for a in accepted if a[0] == b}
        per_bin[b] = {
            "gold": len(g_b),
            "accepted": len(a_b),
            "correct": len(a_b & g_b),
            "exact_match_preliminary": len({p for p in preliminary if p[0] == b} & g_b) / len(g_b) if g_b else 0.0,
            "exact_match_scored": len({s for s in scored if s[0] == b} & g_b) / len(g_b) if g_b else 0.0,
        }
    return EvalReport(
        exact_match_preliminary=len(preliminary & gold) / len(gold),
        exact_match_scored=len(scored & gold) / len(gold),
        recall=len(hit) / len(gold),
        precision=len(hit) / len(accepted) if accepted else 0.0,
        n_gold=len(gold),
        n_accepted=len(accepted),
        per_bin=per_bin,
        timings=dict(timings or {}),
    )


def realign_experiment(raw_pairs, config, work_dir=None, tail_bin_size=None, artifacts=None):
    """Train on the first half of a seed corpus and realign the second half.

    The head is binned with ``config.bin_size`` for training part II, the
    tail with ``tail_bin_size`` (default: the same). Passing ``artifacts``
    skips training.
    """
    config.validate()
    half = len(raw_pairs) // 2
    head, tail_raw = raw_pairs[:half], raw_pairs[half:]
    if artifacts is None:
        artifacts = train_all(head, config, os.path.join(work_dir, "artifacts") if work_dir else None)
    timings = dict(getattr(artifacts, "timings", {}))
    with stage("prepare tail", timings):
        tail = prepare_seed(tail_raw, config, max_tokens=None)
        tail_bins = make_bins(tail, tail_bin_size or config.bin_size, config.src_lang, config.tgt_lang, prefix="tail")
        gold = gold_pairs(tail_bins)
        # forget the tokens so application preprocesses the raw text itself
        docs = [Document(d.id, d.bin_id, d.lang, d.raw_text) for d in bins_to_documents(tail_bins)]
    result = align(docs, artifacts, config)
    timings.update({f"apply: {k}": v for k, v in result.timings.items()})
    report = evaluate(result.refined, gold, result.results, timings=timings)
    if work_dir:
        write_refined(result.refined, os.path.join(work_dir, "refined.tsv"))
        write_gold(gold, os.path.join(work_dir, "gold.tsv"))
        write_candidates(result.results, os.path.join(work_dir, "preliminary.tsv"), "preliminary")
        write_candidates(result.results, os.path.join(work_dir, "scored.tsv"), "scored")
        _dump_json(report.to_json(), os.path.join(work_dir, "report.json"))
    return report, artifacts, result


# -- TSV outputs -----------------------------------------------------------------

def write_refined(records, path):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(f"{r.bin_id}\t{r.source_doc_id}\t{r.target_doc_id}\t{r.score:.9g}\t{r.confidence:.9g}\n")


def read_refined(path):
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            cols = line.rstrip("\n").split("\t")
            if cols == [""]:
                continue
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            out.append(RefinedRecord(cols[0], cols[1], cols[2], float(cols[3]), float(cols[4])))
    return out


def write_corpus(records, docs, path):
    """Extracted corpus: bin, source text, target text, confidence."""
    text = {(d.bin_id, d.id): d.raw_text for d in docs}
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            src = text[(r.bin_id, r.source_doc_id)]
            tgt = text[(r.bin_id, r.target_doc_id)]
            f.write(f"{r.bin_id}\t{escape(src)}\t{escape(tgt)}\t{r.confidence:.9g}\n")


def write_candidates(results, path, which="scored"):
    """Ranked candidate lists: bin, source, rank, target, log score (or distance)."""
    with open(path, "w", encoding="utf-8") as f:
        for r in results:
            for cl in getattr(r, which):
                for rank, c in enumerate(cl.candidates, 1):
                    value = c.distance if which == "preliminary" else c.log_score
                    f.write(f"{r.bin_id}\t{cl.source_doc_id}\t{rank}\t{c.doc_id}\t{value:.9g}\n")


def read_top_candidates(path):
    """(bin, source, target) of every rank-1 row of a candidate file."""
    tops = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            cols = line.rstrip("\n").split("\t")
            if len(cols) == 5 and cols[2] == "1":
                tops.add((cols[0], cols[1], cols[3]))
    return tops


def write_gold(gold, path):
    with open(path, "w", encoding="utf-8") as f:
        for b, s, t in gold:
            f.write(f"{b}\t{s}\t{t}\n")


def read_gold(path):
    gold = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            cols = line.rstrip("\n").split("\t")
            if cols == [""]:
                continue
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            gold.append(tuple(cols))
    return gold
