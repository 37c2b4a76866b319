"""IBM Model 1 translation tables, Viterbi alignment and dictionary induction.

Tables are stored sparsely over co-occurring word pairs: a pair that never
appears in the same sentence pair has probability zero after the first EM
iteration. The E-step is vectorised over fixed-size chunks of sentence
pairs, so summation order (and thus every float) does not depend on how the
work is scheduled.
"""
import logging
import math

import numpy as np

log = logging.getLogger(__name__)

NULL = "<null>"
SRC2TGT = "src2tgt"
TGT2SRC = "tgt2src"
CHUNK_PAIRS = 4096


class TranslationTable:
    """t(generated word | conditioning word), one sparse row per conditioning word.

    ``cond_vocab[0]`` is the NULL word. Row ``c`` holds the generated-word ids
    ``gen_ids[indptr[c]:indptr[c+1]]`` (sorted) and their probabilities.
    """

    def __init__(self, direction, cond_vocab, gen_vocab, indptr, gen_ids, probs, loglik=()):
        self.direction = direction
        self.cond_vocab = list(cond_vocab)
        self.gen_vocab = list(gen_vocab)
        self.cond_index = {w: i for i, w in enumerate(self.cond_vocab)}
        self.gen_index = {w: i for i, w in enumerate(self.gen_vocab)}
        self.indptr = indptr
        self.gen_ids = gen_ids
        self.probs = probs
        self.loglik = list(loglik)
        self._flat = None

    def prob(self, gen_word, cond_word):
        c = self.cond_index.get(cond_word)
        g = self.gen_index.get(gen_word)
        if c is None or g is None:
            return 0.0
        return self._lookup(c, g)

    def _lookup(self, c, g):
        if self._flat is None:
            # flat (cond, gen) -> probability map for fast repeated lookups
            rows = np.repeat(np.arange(len(self.indptr) - 1), np.diff(self.indptr))
            keys = rows * len(self.gen_vocab) + self.gen_ids
            self._flat = dict(zip(keys.tolist(), self.probs.tolist()))
        return self._flat.get(c * len(self.gen_vocab) + g, 0.0)

    def row(self, cond_word):
        """{generated word: probability} for one conditioning word."""
        c = self.cond_index[cond_word]
        lo, hi = self.indptr[c], self.indptr[c + 1]
        return {self.gen_vocab[g]: float(p) for g, p in zip(self.gen_ids[lo:hi], self.probs[lo:hi])}

    def row_sums(self):
        return np.add.reduceat(self.probs, self.indptr[:-1]) if len(self.probs) else np.zeros(0)

    def to_dict(self):
        out = {}
        for c, cw in enumerate(self.cond_vocab):
            lo, hi = self.indptr[c], self.indptr[c + 1]
            for g, p in zip(self.gen_ids[lo:hi], self.probs[lo:hi]):
                out[(self.gen_vocab[g], cw)] = float(p)
        return out


def _sides(pair, direction):
    if direction == SRC2TGT:
        return pair.src, pair.tgt
    if direction == TGT2SRC:
        return pair.tgt, pair.src
    raise ValueError(f"unknown direction {direction!r}")


def _vocab(sentences):
    index = {}
    for sent in sentences:
        for w in sent:
            if w not in index:
                index[w] = len(index)
    return index


class _Chunk:
    """Flattened (cond position x gen position) entries for a run of pairs."""

    def __init__(self, cond_sents, gen_sents, n_gen):
        pair_keys, groups, lens = [], [], []
        group = 0
        for cond, gen in zip(cond_sents, gen_sents):
            c = np.asarray(cond, dtype=np.int64)
            g = np.asarray(gen, dtype=np.int64)
            keys = (c[None, :] * n_gen + g[:, None]).ravel()  # row j = gen position j
            pair_keys.append(keys)
            groups.append(np.repeat(np.arange(group, group + len(g)), len(c)))
            lens.append(np.full(len(g), len(c), dtype=np.float64))
            group += len(g)
        self.keys = np.concatenate(pair_keys)
        self.groups = np.concatenate(groups)
        self.cond_len = np.concatenate(lens)
        self.n_groups = group


def train_ibm1(pairs, iterations=5, direction=SRC2TGT):
    """Estimate IBM Model 1 t-parameters by EM from uniform initialisation.

    ``direction=src2tgt`` estimates t(target | source) with NULL prepended to
    the source side. The returned table's ``loglik`` holds the corpus
    log-likelihood before the first and after every iteration.
    """
    if not pairs:
        raise ValueError("cannot train IBM Model 1 on an empty corpus")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    sides = [_sides(p, direction) for p in pairs]
    cond_index = {NULL: 0}
    for cond, _ in sides:
        for w in cond:
            if w not in cond_index:
                cond_index[w] = len(cond_index)
    gen_index = _vocab(gen for _, gen in sides)
    n_gen = len(gen_index)
    if n_gen == 0:
        raise ValueError("cannot train IBM Model 1: generated side is empty")

    chunks = []
    for lo in range(0, len(sides), CHUNK_PAIRS):
        part = sides[lo:lo + CHUNK_PAIRS]
        cond_ids = [[0] + [cond_index[w] for w in cond] for cond, _ in part]
        gen_ids = [[gen_index[w] for w in gen] for _, gen in part]
        chunks.append(_Chunk(cond_ids, gen_ids, n_gen))

    params = np.unique(np.concatenate([ch.keys for ch in chunks]))
    inverse = [np.searchsorted(params, ch.keys) for ch in chunks]
    param_cond = params // n_gen
    t = np.full(len(params), 1.0 / n_gen)

    loglik = []
    for it in range(iterations + 1):
        counts = np.zeros(len(params))
        ll = 0.0
        for ch, inv in zip(chunks, inverse):
            num = t[inv]
            denom = np.bincount(ch.groups, weights=num, minlength=ch.n_groups)
            ll += float(np.sum(np.log(denom / ch.cond_len)))
            if it < iterations:
                counts += np.bincount(inv, weights=num / denom[ch.groups], minlength=len(params))
        loglik.append(ll)
        if it == iterations:
            break
        totals = np.bincount(param_cond, weights=counts, minlength=len(cond_index))
        t = counts / totals[param_cond]
        log.debug("ibm1 %s iteration %d: loglik %.6f", direction, it + 1, ll)

    indptr = np.searchsorted(param_cond, np.arange(len(cond_index) + 1)).astype(np.int64)
    gen_ids = (params % n_gen).astype(np.int64)
    return TranslationTable(direction, list(cond_index), list(gen_index), indptr, gen_ids, t, loglik)


def viterbi_align(pair, table):
    """Directional Viterbi links as a set of (source index, target index).

    Each generated token links to its most probable conditioning token;
    ties go to the smallest index, NULL wins only if strictly better, and
    tokens with no positive probability stay unlinked.
    """
    cond, gen = _sides(pair, table.direction)
    links = set()
    cond_ids = [table.cond_index.get(w) for w in cond]
    null_id = 0
    for j, gw in enumerate(gen):
        g = table.gen_index.get(gw)
        if g is None:
            continue
        best, best_i = 0.0, -1
        for i, c in enumerate(cond_ids):
            if c is None:
                continue
            p = table._lookup(c, g)
            if p > best:
                best, best_i = p, i
        if best_i < 0 or table._lookup(null_id, g) > best:
            continue
        links.add((best_i, j) if table.direction == SRC2TGT else (j, best_i))
    return links


def symmetrize_union(a, b):
    return set(a) | set(b)


def align_corpus(pairs, fwd, rev):
    """Union-symmetrised alignment for every pair."""
    return [symmetrize_union(viterbi_align(p, fwd), viterbi_align(p, rev)) for p in pairs]


def format_links(links):
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def parse_links(line):
    links = set()
    for item in line.split():
        i, j = item.split("-")
        links.add((int(i), int(j)))
    return links


def write_alignments(alignments, path):
    with open(path, "w", encoding="utf-8") as f:
        for links in alignments:
            f.write(format_links(links) + "\n")


def read_alignments(path):
    with open(path, encoding="utf-8") as f:
        return [parse_links(line) for line in f.read().splitlines()]


def harmonic_mean(a, b):
    return 2.0 * a * b / (a + b)


class Dictionary:
    """Weighted bilingual lexicon; misses fall back to ``null_weight``."""

    def __init__(self, entries=None, threshold=0.1, null_weight=1e-9):
        self.threshold = threshold
        self.null_weight = null_weight
        self.entries = {}
        for (s, t), w in (entries or {}).items():
            if not threshold < w <= 1.0:
                raise ValueError(f"weight {w} of ({s!r}, {t!r}) outside ({threshold}, 1]")
            self.entries.setdefault(s, {})[t] = w

    def get(self, src, tgt):
        row = self.entries.get(src)
        return None if row is None else row.get(tgt)

    def weight(self, src, tgt):
        w = self.get(src, tgt)
        return self.null_weight if w is None else w

    def translations(self, src):
        return self.entries.get(src, {})

    def items(self):
        for s, row in self.entries.items():
            for t, w in row.items():
                yield (s, t), w

    def __len__(self):
        return sum(len(r) for r in self.entries.values())

    def __contains__(self, pair):
        return self.get(*pair) is not None

    def transposed(self):
        return Dictionary({(t, s): w for (s, t), w in self.items()}, self.threshold, self.null_weight)

    def save(self, path):
        rows = sorted(self.items(), key=lambda kv: (kv[0][0], -kv[1], kv[0][1]))
        with open(path, "w", encoding="utf-8") as f:
            for (s, t), w in rows:
                f.write(f"{s}\t{t}\t{w!r}\n")

    @classmethod
    def load(cls, path, threshold=0.1, null_weight=1e-9):
        entries = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 columns")
                entries[(cols[0], cols[1])] = float(cols[2])
        return cls(entries, threshold, null_weight)


def build_dictionary(fwd, rev, threshold=0.1, null_weight=1e-9):
    """Harmonic mean of t(tgt|src) from ``fwd`` and t(src|tgt) from ``rev``.

    Only pairs with positive probability in both tables and a weight above
    ``threshold`` are kept; NULL never enters the dictionary.
    """
    n_rows = len(fwd.cond_vocab)
    row_of = np.repeat(np.arange(n_rows), np.diff(fwd.indptr))
    # fwd entry (src, tgt) -> rev entry (cond=tgt, gen=src)
    src_in_rev = np.array([rev.gen_index.get(w, -1) for w in fwd.cond_vocab], dtype=np.int64)
    tgt_in_rev = np.array([rev.cond_index.get(w, -1) for w in fwd.gen_vocab], dtype=np.int64)
    rs = src_in_rev[row_of]
    rc = tgt_in_rev[fwd.gen_ids] if len(fwd.gen_ids) else np.zeros(0, dtype=np.int64)
    ok = (row_of > 0) & (rs >= 0) & (rc > 0) & (fwd.probs > 0.0)
    n_rev_gen = max(len(rev.gen_vocab), 1)
    rev_rows = np.repeat(np.arange(len(rev.cond_vocab)), np.diff(rev.indptr))
    rev_keys = rev_rows * n_rev_gen + rev.gen_ids
    want = rc * n_rev_gen + rs
    if len(rev_keys) == 0:
        return Dictionary({}, threshold, null_weight)
    k = np.minimum(np.searchsorted(rev_keys, want), len(rev_keys) - 1)
    ok &= rev_keys[k] == want
    p_fwd = fwd.probs
    p_rev = np.where(ok, rev.probs[k], 0.0)
    ok &= p_rev > 0.0
    w = np.zeros(len(p_fwd))
    w[ok] = harmonic_mean(p_fwd[ok], p_rev[ok])
    entries = {}
    for e in np.flatnonzero(ok & (w > threshold)):
        entries[(fwd.cond_vocab[row_of[e]], fwd.gen_vocab[fwd.gen_ids[e]])] = float(w[e])
    return Dictionary(entries, threshold, null_weight)


def corpus_loglik(pairs, table):
    """Model 1 log-likelihood of the generated sides (uniform alignment prior)."""
    total = 0.0
    for pair in pairs:
        cond, gen = _sides(pair, table.direction)
        for gw in gen:
            s = table.prob(gw, NULL) + sum(table.prob(gw, cw) for cw in cond)
            total += math.log(s / (len(cond) + 1))
    return total
