"""Reading and writing seed corpora, document collections and HTML dumps."""
import csv
import logging
import os

from .html import extract_paragraphs
from .langid import MIN_CHARS, detect_language
from .text import Bin, Document, SeedPair, filter_domains, preprocess

log = logging.getLogger(__name__)

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape(text):
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape(text):
    if "\\" not in text:
        return text
    out = []
    it = iter(text)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append(_UNESCAPES.get(nxt, "\\" + nxt))
        else:
            out.append(ch)
    return "".join(out)


def read_seed_corpus(path, target_path=None):
    """Raw (source, target) sentence strings.

    Either two line-aligned plain-text files, or one TSV of ``src<TAB>tgt``.
    """
    if target_path is not None:
        with open(path, encoding="utf-8") as fs, open(target_path, encoding="utf-8") as ft:
            src = fs.read().splitlines()
            tgt = ft.read().splitlines()
        if len(src) != len(tgt):
            raise ValueError(f"{path} has {len(src)} lines but {target_path} has {len(tgt)}")
        return list(zip(src, tgt))
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
            pairs.append((unescape(cols[0]), unescape(cols[1])))
    return pairs


def write_seed_corpus(pairs, path):
    with open(path, "w", encoding="utf-8") as f:
        for src, tgt in pairs:
            f.write(f"{escape(src)}\t{escape(tgt)}\n")


def preprocess_pairs(raw_pairs):
    return [SeedPair(tuple(preprocess(s)), tuple(preprocess(t))) for s, t in raw_pairs]


def read_documents(path):
    """Documents from a ``bin_id, lang, doc_id, text`` TSV (not yet preprocessed)."""
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
            bin_id, lang, doc_id, text = cols
            key = (bin_id, lang, doc_id)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate document id {doc_id!r} in bin {bin_id!r}")
            seen.add(key)
            docs.append(Document(doc_id, bin_id, lang, unescape(text)))
    return docs


def write_documents(docs, path):
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(f"{d.bin_id}\t{d.lang}\t{d.id}\t{escape(d.raw_text)}\n")


def bins_to_documents(bins):
    return [d for b in bins for d in b.source_docs + b.target_docs]


def iter_html_pages(path):
    """Yield (domain, page_name, html) from a ``<domain>/<page>.html`` tree or a TSV."""
    if os.path.isdir(path):
        for domain in sorted(os.listdir(path)):
            ddir = os.path.join(path, domain)
            if not os.path.isdir(ddir):
                continue
            for name in sorted(os.listdir(ddir)):
                if name.endswith((".html", ".htm")):
                    with open(os.path.join(ddir, name), encoding="utf-8", errors="replace") as f:
                        yield domain, os.path.splitext(name)[0], f.read()
    else:
        with open(path, encoding="utf-8", newline="") as f:
            for row in csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE):
                if len(row) != 3:
                    continue
                domain, url, markup = row
                yield domain, url, unescape(markup)


def extract_bins(pages, profiles, src_lang, tgt_lang, min_chars=MIN_CHARS,
                 ratio_low=0.01, ratio_high=100.0):
    """Paragraph bins per domain, language-filtered and ratio-filtered.

    Returns ``(kept_bins, all_bins)``.
    """
    bins = {}
    for domain, page, markup in pages:
        b = bins.setdefault(domain, Bin(domain))
        for k, para in enumerate(extract_paragraphs(markup)):
            if len(para) < min_chars:
                continue
            lang = detect_language(para, profiles, min_chars)
            if lang == src_lang:
                b.source_docs.append(Document(f"{page}#{k}", domain, lang, para))
            elif lang == tgt_lang:
                b.target_docs.append(Document(f"{page}#{k}", domain, lang, para))
    all_bins = [bins[k] for k in sorted(bins)]
    return filter_domains(all_bins, ratio_low, ratio_high), all_bins
