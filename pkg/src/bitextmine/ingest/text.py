"""Documents, bins, seed pairs and the text-level preprocessing around them."""
import logging
import re
import unicodedata
from dataclasses import dataclass, field, replace

log = logging.getLogger(__name__)

# combining marks stay attached to the word they modify
_WORD = r"[\w\u0300-\u036f\u1ab0-\u1aff\u1dc0-\u1dff\u20d0-\u20ff\ufe20-\ufe2f]+"
_TOKEN_RE = re.compile(_WORD + r"|[^\w\s]")


def preprocess(text):
    """Tokenize and lowercase ``text``.

    Words are maximal runs of word characters; every other non-space
    character becomes a token of its own.

    >>> preprocess("The House.")
    ['the', 'house', '.']
    """
    text = unicodedata.normalize("NFC", text.lower())
    return _TOKEN_RE.findall(text)


def has_letter(tokens):
    return any(ch.isalpha() for tok in tokens for ch in tok)


@dataclass(frozen=True)
class Document:
    id: str
    bin_id: str
    lang: str
    raw_text: str
    tokens: tuple = ()

    def preprocessed(self):
        if self.tokens:
            raise ValueError(f"document {self.id!r} is already preprocessed")
        return replace(self, tokens=tuple(preprocess(self.raw_text)))


@dataclass
class Bin:
    id: str
    source_docs: list = field(default_factory=list)
    target_docs: list = field(default_factory=list)

    def __post_init__(self):
        for doc in self.source_docs + self.target_docs:
            if doc.bin_id != self.id:
                raise ValueError(f"document {doc.id!r} belongs to bin {doc.bin_id!r}, not {self.id!r}")


@dataclass(frozen=True)
class SeedPair:
    src: tuple
    tgt: tuple


def clean_seed(pairs, max_tokens=50, require_letter=True):
    """Drop pairs with an over-long side or (optionally) a side without letters.

    ``max_tokens=None`` disables the length criterion.
    """
    kept = []
    for pair in pairs:
        if max_tokens is not None and (len(pair.src) > max_tokens or len(pair.tgt) > max_tokens):
            continue
        if require_letter and not (has_letter(pair.src) and has_letter(pair.tgt)):
            continue
        kept.append(pair)
    return kept


def source_id(n):
    return f"s{n:07d}"


def target_id(n):
    return f"t{n:07d}"


def gold_partner(doc_id):
    """Target id of the gold partner of a source document built by :func:`make_bins`."""
    if not doc_id.startswith("s"):
        raise ValueError(f"{doc_id!r} is not a source document id")
    return "t" + doc_id[1:]


def make_bins(pairs, bin_size=50000, src_lang="cs", tgt_lang="en", prefix="bin"):
    """Split seed pairs into consecutive bins of ``bin_size`` parallel documents.

    Pair ``n`` becomes source document ``s<n>`` and target document ``t<n>``;
    see :func:`gold_partner`.
    """
    if bin_size < 1:
        raise ValueError(f"bin_size must be >= 1, got {bin_size}")
    bins = []
    for b, lo in enumerate(range(0, len(pairs), bin_size)):
        bin_id = f"{prefix}{b:05d}"
        src, tgt = [], []
        for n in range(lo, min(lo + bin_size, len(pairs))):
            pair = pairs[n]
            src.append(Document(source_id(n), bin_id, src_lang, " ".join(pair.src), tuple(pair.src)))
            tgt.append(Document(target_id(n), bin_id, tgt_lang, " ".join(pair.tgt), tuple(pair.tgt)))
        bins.append(Bin(bin_id, src, tgt))
    return bins


def gold_pairs(bins):
    """Gold (bin_id, source_id, target_id) triples for bins from :func:`make_bins`."""
    gold = []
    for b in bins:
        tgt_ids = {d.id for d in b.target_docs}
        for d in b.source_docs:
            partner = gold_partner(d.id)
            if partner in tgt_ids:
                gold.append((b.id, d.id, partner))
    return gold


def filter_domains(bins, ratio_low=0.01, ratio_high=100.0):
    """Keep bins whose source/target count ratio lies strictly inside the interval."""
    if not ratio_low < ratio_high:
        raise ValueError("ratio_low must be smaller than ratio_high")
    kept = []
    for b in bins:
        n_src, n_tgt = len(b.source_docs), len(b.target_docs)
        if n_src == 0 or n_tgt == 0:
            log.info("dropping bin %s: %d source / %d target documents", b.id, n_src, n_tgt)
            continue
        if ratio_low < n_src / n_tgt < ratio_high:
            kept.append(b)
        else:
            log.info("dropping unbalanced bin %s (%d/%d)", b.id, n_src, n_tgt)
    return kept


def group_into_bins(docs, src_lang, tgt_lang):
    """Group documents into bins by ``bin_id``, ordered by bin id.

    Documents in other languages are ignored.
    """
    by_bin = {}
    for doc in docs:
        if doc.lang not in (src_lang, tgt_lang):
            continue
        b = by_bin.setdefault(doc.bin_id, Bin(doc.bin_id))
        (b.source_docs if doc.lang == src_lang else b.target_docs).append(doc)
    return [by_bin[k] for k in sorted(by_bin)]
