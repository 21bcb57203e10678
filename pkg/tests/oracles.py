"""Independent brute-force oracles the tests check the real implementations against.

Deliberately written with naive enumeration and kept free of any imports from
the package's metric/query code paths.
"""

from __future__ import annotations

import math
import re
from collections import Counter

_PUNCT = re.compile(r"([^\w\s])")
DONTCARE = "dontcare"


def _tokens(text: str) -> list[str]:
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def _ngram_list(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_bruteforce(pairs: list[tuple[str, str]]) -> float:
    """Corpus BLEU-4 by explicit n-gram enumeration, scaled to [0, 100]."""
    hyp_len = 0
    ref_len = 0
    clipped = [0, 0, 0, 0]
    total = [0, 0, 0, 0]
    for hyp, ref in pairs:
        h = _tokens(hyp)
        r = _tokens(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, 5):
            h_counts = Counter(_ngram_list(h, n))
            r_counts = Counter(_ngram_list(r, n))
            for gram, count in h_counts.items():
                clipped[n - 1] += min(count, r_counts.get(gram, 0))
                total[n - 1] += count
    if any(t == 0 for t in total):
        return 0.0
    precisions = [clipped[i] / total[i] for i in range(4)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    geo_mean = math.exp(sum(0.25 * math.log(p) for p in precisions))
    brevity = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return brevity * geo_mean * 100.0


def db_filter_bruteforce(entities, constraints):
    """Scan all entities against (slot, value) constraints; dontcare is a wildcard.

    ``entities`` are package Entity values but only their ``normalized`` dicts
    are read; returns (count, matching indices, first match index or None).
    """
    matching = []
    for i, entity in enumerate(entities):
        ok = True
        for slot, value in constraints:
            if value == DONTCARE:
                continue
            if entity.normalized.get(slot) != value:
                ok = False
                break
        if ok:
            matching.append(i)
    return len(matching), matching, (matching[0] if matching else None)
