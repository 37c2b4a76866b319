import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bitextmine.ingest import (
    Bin,
    Document,
    SeedPair,
    clean_seed,
    detect_language,
    extract_paragraphs,
    filter_domains,
    gold_pairs,
    group_into_bins,
    make_bins,
    preprocess,
)
from bitextmine.ingest.io import (
    escape,
    extract_bins,
    iter_html_pages,
    read_documents,
    read_seed_corpus,
    unescape,
    write_documents,
    write_seed_corpus,
)
from bitextmine.ingest.langid import Profile, load_profiles, save_profiles
from bitextmine.synthetic import LanguagePair
from conftest import FIXTURES
from oracles import reference_paragraphs


# -- preprocess ----------------------------------------------------------------

def test_preprocess_examples():
    assert preprocess("The House.") == ["the", "house", "."]
    assert preprocess("") == []
    assert preprocess("Praha 2015") == ["praha", "2015"]


def test_preprocess_keeps_diacritics_and_splits_punctuation():
    assert preprocess("Žluťoučký kůň, \"řekl\"!") == ["žluťoučký", "kůň", ",", '"', "řekl", '"', "!"]


def test_preprocess_combining_marks_stay_in_word():
    # decomposed input is normalised and kept as one token
    assert preprocess("Café ok") == ["café", "ok"]


@given(st.text())
def test_preprocess_idempotent(text):
    toks = preprocess(text)
    assert preprocess(" ".join(toks)) == toks


@given(st.text())
def test_preprocess_lowercase_and_no_whitespace(text):
    for tok in preprocess(text):
        assert tok and not any(ch.isspace() for ch in tok)
        assert tok == tok.lower() or preprocess(tok) == [tok]


def test_document_tokens_fill_once():
    d = Document("1", "b", "cs", "Ahoj světe").preprocessed()
    assert d.tokens == ("ahoj", "světe")
    with pytest.raises(ValueError):
        d.preprocessed()
    with pytest.raises(Exception):
        d.tokens = ("x",)


def test_bin_rejects_foreign_documents():
    with pytest.raises(ValueError):
        Bin("a", [Document("1", "b", "cs", "x")], [])


# -- clean_seed ------------------------------------------------------------------

def sp(src, tgt):
    return SeedPair(tuple(preprocess(src)), tuple(preprocess(tgt)))


def test_clean_seed_examples():
    long_pair = SeedPair(tuple(["w"] * 51), ("a",))
    digits = sp("123 456", "789")
    ok = sp("a", "b")
    assert clean_seed([long_pair, digits, ok]) == [ok]


def test_clean_seed_limit_is_inclusive_and_optional():
    fifty = SeedPair(tuple(["w"] * 50), ("a",))
    assert clean_seed([fifty]) == [fifty]
    long_pair = SeedPair(tuple(["w"] * 80), ("a",))
    assert clean_seed([long_pair], max_tokens=None) == [long_pair]
    assert clean_seed([sp("1", "2")], require_letter=False) == [sp("1", "2")]


def test_clean_seed_empty_side_removed():
    assert clean_seed([SeedPair((), ("a",))]) == []


token_lists = st.lists(st.sampled_from(["a", "b", "1", ".", "řeka", "42"]), max_size=8)
seed_pairs = st.lists(st.builds(lambda s, t: SeedPair(tuple(s), tuple(t)), token_lists, token_lists),
                      max_size=20)


@given(seed_pairs, st.integers(1, 8))
def test_clean_seed_subsequence_and_fixed_point(pairs, limit):
    kept = clean_seed(pairs, limit)
    it = iter(pairs)
    assert all(any(k is p for p in it) for k in kept)  # order-preserving subsequence
    assert clean_seed(kept, limit) == kept
    assert all(k.src and k.tgt for k in kept)


# -- bins ------------------------------------------------------------------------

def test_make_bins_sizes():
    pairs = [sp(f"a{i}", f"b{i}") for i in range(7)]
    assert [len(b.source_docs) for b in make_bins(pairs, 3)] == [3, 3, 1]
    assert [len(b.target_docs) for b in make_bins(pairs[:6], 3)] == [3, 3]
    with pytest.raises(ValueError):
        make_bins(pairs, 0)


def test_make_bins_default_size():
    pairs = [SeedPair(("a",), ("b",))] * 50000
    bins = make_bins(pairs, 50000)
    assert len(bins) == 1
    assert len(bins[0].source_docs) + len(bins[0].target_docs) == 100000


@given(st.integers(0, 40), st.integers(1, 12))
def test_make_bins_partition(n, size):
    pairs = [SeedPair((f"s{i}",), (f"t{i}",)) for i in range(n)]
    bins = make_bins(pairs, size)
    flat = [d.tokens for b in bins for d in b.source_docs]
    assert flat == [p.src for p in pairs]
    for b in bins:
        assert all(d.bin_id == b.id for d in b.source_docs + b.target_docs)
        assert all(d.lang == "cs" for d in b.source_docs)
    gold = gold_pairs(bins)
    assert len(gold) == n
    by_id = {d.id: d for b in bins for d in b.source_docs + b.target_docs}
    for b_id, s, t in gold:
        assert by_id[s].bin_id == by_id[t].bin_id == b_id
        assert int(s[1:]) == int(t[1:])


def test_group_into_bins_orders_and_filters():
    docs = [Document("1", "z", "cs", "x"), Document("2", "a", "en", "y"), Document("3", "a", "de", "q")]
    bins = group_into_bins(docs, "cs", "en")
    assert [b.id for b in bins] == ["a", "z"]
    assert [len(b.source_docs) for b in bins] == [0, 1]
    assert [len(b.target_docs) for b in bins] == [1, 0]


def _bin(n_src, n_tgt, name="b"):
    return Bin(name, [Document(f"s{i}", name, "cs", "x") for i in range(n_src)],
               [Document(f"t{i}", name, "en", "y") for i in range(n_tgt)])


def test_filter_domains_examples():
    assert filter_domains([_bin(1, 500)]) == []
    assert len(filter_domains([_bin(10, 10)])) == 1
    assert filter_domains([_bin(101, 1)]) == []
    assert filter_domains([_bin(0, 3), _bin(3, 0)]) == []


@given(st.integers(0, 300), st.integers(0, 300))
def test_filter_domains_keeps_iff_strictly_inside(n_src, n_tgt):
    kept = filter_domains([_bin(n_src, n_tgt)], 0.01, 100.0)
    expected = n_src > 0 and n_tgt > 0 and 0.01 < n_src / n_tgt < 100.0
    assert bool(kept) == expected


def test_filter_domains_boundaries_are_exclusive():
    assert filter_domains([_bin(100, 1)]) == []
    assert filter_domains([_bin(1, 100)]) == []
    assert len(filter_domains([_bin(99, 1)])) == 1


# -- HTML --------------------------------------------------------------------------

def test_extract_paragraphs_examples():
    assert extract_paragraphs("<p>Hello</p><p>World</p>") == ["Hello", "World"]
    assert extract_paragraphs("<div>x</div>") == []
    assert extract_paragraphs("<p>a &amp; b") == reference_paragraphs("<p>a &amp; b") == ["a & b"]


def test_extract_paragraphs_tolerant():
    markup = ("<P CLASS='x'>One <b>bold</b><br>line<p>Two &lt;3 &#65;&#x42; &quot;q&quot; &apos;"
              "<div>three</div><script>var s='<p>no</p>';</script><p>four<!-- <p>c</p> -->")
    assert extract_paragraphs(markup) == ["One bold line", 'Two <3 AB "q" \'', "four"]


def test_extract_paragraphs_non_html():
    assert extract_paragraphs("just text, no tags") == []
    assert extract_paragraphs("") == []
    assert extract_paragraphs("<p>") == []


words = st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" &<>\"'"),
                max_size=20)
inline = st.sampled_from(["b", "i", "span", "a", "em"])


@st.composite
def well_formed(draw):
    parts = []
    for _ in range(draw(st.integers(0, 5))):
        kind = draw(st.sampled_from(["p", "div", "text", "script"]))
        text = draw(words)
        esc = text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        if kind == "p":
            tag = draw(inline)
            extra = draw(words).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            br = "<br>" if draw(st.booleans()) else ""
            parts.append(f"<p>{esc}<{tag}>{extra}</{tag}>{br}{esc}</p>")
        elif kind == "div":
            parts.append(f"<div>{esc}</div>")
        elif kind == "script":
            parts.append(f"<script>var a = '<p>{text}</p>';</script>")
        else:
            parts.append(esc)
    return "<html><body>" + "\n".join(parts) + "</body></html>"


@given(well_formed())
def test_extract_paragraphs_matches_reference_parser(markup):
    assert extract_paragraphs(markup) == reference_paragraphs(markup)


def test_fixture_pages_match_reference_parser():
    for domain, page, markup in iter_html_pages(os.path.join(FIXTURES, "html")):
        assert extract_paragraphs(markup) == reference_paragraphs(markup), (domain, page)


# -- language identification ------------------------------------------------------

@pytest.fixture(scope="module")
def profiles():
    lp = LanguagePair(7)
    train = lp.corpus(3000, seed=1)
    return [Profile.train("cs", [s for s, _ in train]), Profile.train("en", [t for _, t in train])]


def test_detect_language_short_texts(profiles):
    assert detect_language("x" * 99, profiles) is None
    assert detect_language("", profiles) is None


def test_detect_language_self_classification(profiles):
    lp = LanguagePair(7)
    held = lp.corpus(400, seed=99)
    total = correct = 0
    for side, lang in ((0, "cs"), (1, "en")):
        text = " ".join(p[side] for p in held)
        for i in range(100):
            excerpt = text[i * 200:(i + 1) * 200]
            total += 1
            correct += detect_language(excerpt, profiles) == lang
    assert correct / total >= 0.95


def test_profiles_round_trip(tmp_path, profiles):
    path = tmp_path / "profiles.json"
    save_profiles(profiles, path)
    loaded = load_profiles(path)
    assert [(p.lang, p.ranked) for p in loaded] == [(p.lang, p.ranked) for p in profiles]


# -- file formats ------------------------------------------------------------------

@given(st.text())
def test_escape_round_trip(text):
    esc = escape(text)
    assert "\t" not in esc and "\n" not in esc
    assert unescape(esc) == text


def test_seed_corpus_formats(tmp_path):
    pairs = [("a\tb", "c"), ("d", "e\nf")]
    path = tmp_path / "seed.tsv"
    write_seed_corpus(pairs, path)
    assert read_seed_corpus(path) == pairs
    (tmp_path / "s.txt").write_text("a\nb\n", encoding="utf-8")
    (tmp_path / "t.txt").write_text("x\ny\n", encoding="utf-8")
    assert read_seed_corpus(tmp_path / "s.txt", tmp_path / "t.txt") == [("a", "x"), ("b", "y")]
    (tmp_path / "t.txt").write_text("x\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_seed_corpus(tmp_path / "s.txt", tmp_path / "t.txt")


def test_documents_round_trip_and_duplicates(tmp_path):
    docs = [Document("1", "b", "cs", "tab\there"), Document("1", "b", "en", "line\nbreak")]
    path = tmp_path / "docs.tsv"
    write_documents(docs, path)
    assert read_documents(path) == docs
    with open(path, "a", encoding="utf-8") as f:
        f.write("b\tcs\t1\tagain\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_documents(path)


def test_html_tsv_input(tmp_path, profiles):
    lp = LanguagePair(7)
    import random
    rng = random.Random(5)
    cs, en = lp.paragraph_pair(rng, 5)
    path = tmp_path / "pages.tsv"
    path.write_text(f"dom\tu1\t<p>{cs}</p>\ndom\tu2\t<p>{en}</p>\nother\tu3\t<p>{en}</p>\n", encoding="utf-8")
    kept, all_bins = extract_bins(iter_html_pages(str(path)), profiles, "cs", "en")
    assert [b.id for b in all_bins] == ["dom", "other"]
    assert [b.id for b in kept] == ["dom"]
    assert kept[0].source_docs[0].raw_text == cs
