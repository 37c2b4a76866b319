"""Independent reference implementations used as test oracles.

None of these share code with the package: they are deliberately naive.
"""
import math
from collections import defaultdict
from html.parser import HTMLParser

import numpy as np

NULL = "<null>"


def ibm1_em(pairs, iterations):
    """Plain-dict IBM Model 1 EM for t(tgt | src) with NULL on the source side.

    ``pairs`` are (source tokens, target tokens). Returns (t, logliks) where
    t maps (tgt, src) -> probability and logliks has iterations + 1 values.
    """
    tgt_vocab = sorted({w for _, tgt in pairs for w in tgt})
    t = {}
    for src, tgt in pairs:
        for f in tgt:
            for e in [NULL] + list(src):
                t[(f, e)] = 1.0 / len(tgt_vocab)

    def loglik():
        ll = 0.0
        for src, tgt in pairs:
            cond = [NULL] + list(src)
            for f in tgt:
                ll += math.log(sum(t[(f, e)] for e in cond) / len(cond))
        return ll

    lls = [loglik()]
    for _ in range(iterations):
        count = defaultdict(float)
        total = defaultdict(float)
        for src, tgt in pairs:
            cond = [NULL] + list(src)
            for f in tgt:
                z = sum(t[(f, e)] for e in cond)
                for e in cond:
                    c = t[(f, e)] / z
                    count[(f, e)] += c
                    total[e] += c
        t = {(f, e): count[(f, e)] / total[e] for (f, e) in t}
        lls.append(loglik())
    return t, lls


def brute_force_knn(vectors, q, k):
    """Exact k nearest rows by angular distance; ties by row index."""
    vectors = np.asarray(vectors, dtype=np.float64)
    unit = vectors / np.linalg.norm(vectors, axis=1)[:, None]
    qn = np.asarray(q, dtype=np.float64)
    qn = qn / np.linalg.norm(qn)
    dist = np.sqrt(np.maximum(0.0, 2.0 - 2.0 * (unit @ qn)))
    order = np.lexsort((np.arange(len(dist)), dist))[:k]
    return order, dist[order]


class _ParagraphCollector(HTMLParser):
    """Reference ``<p>`` text extraction for well-formed markup."""

    RAW = {"script", "style", "textarea", "title", "noscript", "template"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.out = []
        self.current = None
        self.raw_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self.RAW:
            self.raw_depth += 1
        elif tag == "p":
            self._close()
            self.current = []
        elif tag == "br" and self.current is not None:
            self.current.append(" ")

    def handle_endtag(self, tag):
        if tag in self.RAW:
            self.raw_depth = max(0, self.raw_depth - 1)
        elif tag == "p":
            self._close()

    def handle_data(self, data):
        if self.current is not None and not self.raw_depth:
            self.current.append(data)

    def _close(self):
        if self.current is not None:
            text = " ".join("".join(self.current).split())
            if text:
                self.out.append(text)
        self.current = None

    def close(self):
        super().close()
        self._close()


def reference_paragraphs(markup):
    parser = _ParagraphCollector()
    parser.feed(markup)
    parser.close()
    return parser.out


def central_difference(f, x, h=1e-5):
    """Numerical gradient of scalar ``f`` at array ``x`` (modified in place and restored)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def relative_error(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(1e-8, np.abs(a) + np.abs(b))))
