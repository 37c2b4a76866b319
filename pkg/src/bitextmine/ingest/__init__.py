from .html import extract_paragraphs
from .langid import Profile, detect_language, load_profiles, save_profiles
from .text import (
    Bin,
    Document,
    SeedPair,
    clean_seed,
    filter_domains,
    gold_pairs,
    gold_partner,
    group_into_bins,
    has_letter,
    make_bins,
    preprocess,
)

__all__ = [
    "Bin", "Document", "Profile", "SeedPair", "clean_seed", "detect_language",
    "extract_paragraphs", "filter_domains", "gold_pairs", "gold_partner", "group_into_bins",
    "has_letter", "load_profiles", "make_bins", "preprocess", "save_profiles",
]
