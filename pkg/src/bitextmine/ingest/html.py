"""Paragraph extraction from possibly malformed HTML.

A single pass over the markup with a tag regex; no tree is built. Text is
collected while a ``<p>`` is open. An open paragraph is closed by ``</p>``,
by another ``<p>``, by the start or end of a block-level element, or by the
end of input.
"""
import html
import re

_TOKEN = re.compile(
    r"<!--.*?(?:-->|\Z)"                      # comment
    r"|<![^>]*>?"                             # doctype / cdata-ish
    r"|<\?[^>]*>?"                            # processing instruction
    r"|<(/?)([a-zA-Z][a-zA-Z0-9:-]*)((?:[^>\"']|\"[^\"]*\"|'[^']*')*)>",
    re.DOTALL,
)
_WS = re.compile(r"\s+")

_RAW_TEXT = {"script", "style", "textarea", "title", "noscript", "template"}
_BLOCK = {
    "address", "article", "aside", "blockquote", "body", "center", "details", "dialog", "dd",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "head", "header", "hgroup", "hr", "html", "li", "main", "menu", "nav",
    "ol", "pre", "section", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
}


def _clean(parts):
    return _WS.sub(" ", "".join(parts)).strip()


def extract_paragraphs(markup):
    """Return the text of every ``<p>`` element in document order."""
    paragraphs = []
    buf = None  # None when no paragraph is open
    pos = 0

    def close():
        nonlocal buf
        if buf is not None:
            text = _clean(buf)
            if text:
                paragraphs.append(text)
        buf = None

    while pos < len(markup):
        m = _TOKEN.search(markup, pos)
        end = m.start() if m else len(markup)
        if buf is not None and end > pos:
            buf.append(html.unescape(markup[pos:end]))
        if m is None:
            break
        pos = m.end()
        name = m.group(2)
        if name is None:
            continue
        name = name.lower()
        closing = m.group(1) == "/"
        if not closing and name in _RAW_TEXT:
            stop = re.compile(r"</\s*" + name + r"\s*>", re.IGNORECASE).search(markup, pos)
            pos = stop.end() if stop else len(markup)
            continue
        if name == "p" or name in _BLOCK:
            close()
            if name == "p" and not closing:
                buf = []
        elif name == "br" and buf is not None:
            buf.append(" ")
    close()
    return paragraphs
