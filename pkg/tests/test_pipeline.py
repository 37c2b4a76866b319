import json
import os
import random
import time

import numpy as np
import pytest

from bitextmine.config import RunConfig
from bitextmine.ingest import Document
from bitextmine.pipeline import (
    Artifacts,
    PipelineError,
    RefinedRecord,
    align,
    evaluate,
    read_gold,
    read_refined,
    realign_experiment,
    train_all,
    write_gold,
    write_refined,
)
from bitextmine.synthetic import LanguagePair, mini_corpus, noisy_dataset

CONFIG = RunConfig(bin_size=500)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("art") / "artifacts"
    t0 = time.perf_counter()
    artifacts = train_all(mini_corpus(1000), CONFIG, out)
    return artifacts, out, time.perf_counter() - t0


def docs_from_rows(rows):
    return [Document(doc_id, bin_id, lang, text) for bin_id, lang, doc_id, text in rows]


# -- evaluation ----------------------------------------------------------------------

def _rec(b, s, t):
    return RefinedRecord(b, s, t, 0.1, 0.9)


def test_evaluate_examples():
    gold = [("b", "s1", "t1"), ("b", "s2", "t2"), ("c", "s3", "t3"), ("c", "s4", "t4")]
    full = evaluate([_rec(*g) for g in gold], gold)
    assert (full.recall, full.precision) == (1.0, 1.0)
    half = evaluate([_rec(*g) for g in gold[:2]], gold)
    assert (half.recall, half.precision) == (0.5, 1.0)
    assert half.per_bin["c"]["correct"] == 0
    mixed = evaluate([_rec("b", "s1", "t1"), _rec("b", "s2", "t9")], gold,
                     preliminary={("b", "s1", "t1")}, scored={("b", "s1", "t1"), ("b", "s2", "t2")})
    assert (mixed.recall, mixed.precision) == (0.25, 0.5)
    assert (mixed.exact_match_preliminary, mixed.exact_match_scored) == (0.25, 0.5)
    assert evaluate([], gold).precision == 0.0
    with pytest.raises(ValueError):
        evaluate([], [])


def test_refined_and_gold_round_trip(tmp_path):
    recs = [RefinedRecord("b", "s1", "t1", 1.5e-30, 0.75)]
    write_refined(recs, tmp_path / "r.tsv")
    assert read_refined(tmp_path / "r.tsv") == recs
    write_gold([("b", "s", "t")], tmp_path / "g.tsv")
    assert read_gold(tmp_path / "g.tsv") == [("b", "s", "t")]
    (tmp_path / "bad.tsv").write_text("b\ts\n", encoding="utf-8")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        read_refined(tmp_path / "bad.tsv")


# -- training ------------------------------------------------------------------------

def test_toy_corpus_trains_quickly(trained):
    artifacts, out, seconds = trained
    assert seconds < 300
    assert len(artifacts.dictionary) > 0
    assert artifacts.training_report.exact_match_scored >= artifacts.training_report.exact_match_preliminary
    report = json.loads((out / "training_report.json").read_text(encoding="utf-8"))
    assert "embeddings" in report["timings"]


def test_manifest_hashes_are_deterministic(trained, tmp_path):
    _, out, _ = trained
    train_all(mini_corpus(1000), CONFIG, tmp_path / "again")
    first = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    second = json.loads((tmp_path / "again" / "manifest.json").read_text(encoding="utf-8"))
    assert first["files"] == second["files"]
    assert first["config"] == CONFIG.to_dict()


def test_artifacts_load_and_tamper_detection(trained, tmp_path):
    artifacts, out, _ = trained
    loaded = Artifacts.load(out)
    assert dict(loaded.dictionary.items()) == dict(artifacts.dictionary.items())
    assert np.allclose(loaded.embeddings.vectors, artifacts.embeddings.vectors, rtol=1e-6, atol=1e-9)
    copy = tmp_path / "copy"
    artifacts.save(copy)
    with open(copy / "dictionary.tsv", "a", encoding="utf-8") as f:
        f.write("x\ty\t0.5\n")
    with pytest.raises(ValueError, match="manifest hash"):
        Artifacts.load(copy)
    manifest = json.loads((copy / "manifest.json").read_text(encoding="utf-8"))
    manifest["preprocessing"]["lowercase"] = False
    (copy / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    with pytest.raises(ValueError, match="preprocessing"):
        Artifacts.load(copy, verify=False)


def test_failed_training_leaves_no_artifacts(tmp_path):
    with pytest.raises(PipelineError) as err:
        train_all([("jen", "only")], CONFIG, tmp_path / "out")
    assert err.value.stage == "preprocess and clean"
    assert not (tmp_path / "out").exists()
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".partial")]


# -- application ---------------------------------------------------------------------

def _lexicon_bin(dictionary, n, seed, bin_id="lex"):
    """Documents written word for word through the strongest dictionary entries."""
    best = {}
    for (s, t), w in dictionary.items():
        if w > 0.5 and s.isalpha() and w > best.get(s, ("", 0.0))[1]:
            best[s] = (t, w)
    words = sorted(best)
    rng = random.Random(seed)
    docs, gold = [], []
    for i in range(n):
        src = [rng.choice(words) for _ in range(rng.randint(6, 14))]
        docs.append(Document(f"s{i}", bin_id, "cs", " ".join(src)))
        docs.append(Document(f"t{i}", bin_id, "en", " ".join(best[w][0] for w in src)))
        gold.append((bin_id, f"s{i}", f"t{i}"))
    return docs, gold


def test_lexicon_bin_accepts_only_gold(trained):
    artifacts, _, _ = trained
    docs, gold = _lexicon_bin(artifacts.dictionary, 100, seed=5)
    result = align(docs, artifacts)
    accepted = {(r.bin_id, r.source_doc_id, r.target_doc_id) for r in result.refined}
    assert accepted
    assert accepted <= set(gold)


def test_empty_source_side_and_strict_threshold(trained):
    artifacts, _, _ = trained
    docs, _ = _lexicon_bin(artifacts.dictionary, 20, seed=6)
    only_tgt = [d for d in docs if d.lang == "en"]
    result = align(only_tgt, artifacts)
    assert result.refined == [] and result.results[0].tops == []
    strict = align(docs, artifacts, artifacts.config.updated(threshold=1.0))
    assert strict.refined == []


def test_empty_target_side_is_skipped(trained):
    artifacts, _, _ = trained
    docs, _ = _lexicon_bin(artifacts.dictionary, 5, seed=6)
    result = align([d for d in docs if d.lang == "cs"], artifacts)
    assert result.refined == [] and result.results[0].skipped


def test_dimension_mismatch(trained):
    artifacts, _, _ = trained
    with pytest.raises(ValueError, match="dimension"):
        align([], artifacts, artifacts.config.updated(dim=7))


@pytest.fixture(scope="module")
def noisy_docs():
    rows, gold = noisy_dataset(LanguagePair(7), 60, 20, 20, 3, seed=9)
    return docs_from_rows(rows), gold


def test_no_pairs_cross_bins_or_languages(trained, noisy_docs):
    artifacts, _, _ = trained
    docs, _ = noisy_docs
    by_id = {(d.bin_id, d.id): d for d in docs}
    result = align(docs, artifacts)
    assert result.refined
    for r in result.refined:
        assert by_id[(r.bin_id, r.source_doc_id)].lang == "cs"
        assert by_id[(r.bin_id, r.target_doc_id)].lang == "en"
        assert r.confidence > artifacts.config.threshold
    assert len({(r.bin_id, r.source_doc_id) for r in result.refined}) == len(result.refined)


def test_bin_isolation_with_bin_idf(trained, noisy_docs):
    artifacts, _, _ = trained
    docs, _ = noisy_docs
    cfg = artifacts.config.updated(idf_scope="bin")
    together = align(docs, artifacts, cfg).refined
    separate = []
    for b in sorted({d.bin_id for d in docs}):
        separate += align([d for d in docs if d.bin_id == b], artifacts, cfg).refined
    assert together == separate


def test_worker_count_keeps_accepted_set(trained, noisy_docs):
    artifacts, _, _ = trained
    docs, _ = noisy_docs
    one = align(docs, artifacts, artifacts.config.updated(workers=1))
    again = align(docs, artifacts, artifacts.config.updated(workers=1))
    two = align(docs, artifacts, artifacts.config.updated(workers=2))
    assert one.refined == again.refined
    key = lambda res: {(r.bin_id, r.source_doc_id, r.target_doc_id) for r in res.refined}
    assert key(one) == key(two)
    assert [r.bin_id for r in two.results] == sorted(r.bin_id for r in two.results)


def test_realign_experiment_writes_outputs(trained, tmp_path):
    artifacts, _, _ = trained
    report, _, result = realign_experiment(mini_corpus(600, seed=21), artifacts.config, tmp_path,
                                           tail_bin_size=100, artifacts=artifacts)
    assert report.n_gold == 300
    assert 0.0 <= report.recall <= 1.0 and 0.0 <= report.precision <= 1.0
    assert report.exact_match_scored >= report.exact_match_preliminary
    for name in ("refined.tsv", "gold.tsv", "preliminary.tsv", "scored.tsv", "report.json"):
        assert (tmp_path / name).exists()
    assert sorted(report.per_bin) == ["tail00000", "tail00001", "tail00002"]
