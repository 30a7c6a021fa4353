"""Independent line-by-line accounting for the ingest fixtures.

Usage: python3 count_ingest.py FILE [TEXT_FIELD RATING_FIELD PRODUCT_FIELD]
Prints kept, malformed, duplicate and other-product counts.
"""
import json
import math
import re
import sys


def reject_duplicates(pairs):
    keys = [k for k, _ in pairs]
    if len(keys) != len(set(keys)):
        raise ValueError("duplicate key")
    return dict(pairs)


def clean(text):
    prev = None
    while prev != text:
        prev = text
        text = re.sub(r"<(?:/[A-Za-z]|!|[A-Za-z])[^<>]*>", " ", text)
    return " ".join(text.split())


def main():
    path = sys.argv[1]
    tf, rf, pf = (sys.argv[2:5] if len(sys.argv) >= 5 else ("reviewText", "overall", "asin"))
    kept, malformed, dups, other = [], 0, 0, 0
    product = None
    seen = set()
    with open(path, encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for line in lines:
        try:
            obj = json.loads(line, object_pairs_hook=reject_duplicates)
        except ValueError:
            malformed += 1
            continue
        if not isinstance(obj, dict) or not all(k in obj for k in (tf, rf, pf)):
            malformed += 1
            continue
        text, rating, prod = obj[tf], obj[rf], obj[pf]
        if not isinstance(text, str) or not isinstance(prod, str) or isinstance(rating, bool) \
                or not isinstance(rating, (int, float)) or not prod:
            malformed += 1
            continue
        rating = math.trunc(rating)
        if rating < 1 or rating > 5:
            malformed += 1
            continue
        text = clean(text)
        if not re.search(r"[A-Za-z0-9]", text):
            malformed += 1
            continue
        if product is None:
            product = prod
        if prod != product:
            other += 1
            continue
        if (text, rating) in seen:
            dups += 1
            continue
        seen.add((text, rating))
        kept.append((text, rating))
    print(f"lines={len(lines)} kept={len(kept)} malformed={malformed} duplicates={dups} other={other}")


if __name__ == "__main__":
    main()
