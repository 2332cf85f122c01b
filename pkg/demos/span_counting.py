"""Counting identities for chain-reachable spans, checked numerically.

Tabulates, over all labeled trees on n nodes:
  * the total number of valid spans against the closed form (n+1)^(n-1),
  * the per-tree average against the e*n ceiling,
  * the length-capped count F(n, L) against brute-force enumeration.
"""

import math
from fractions import Fraction

from spancrf.combinatorics import (
    average_valid_spans,
    brute_force_F,
    closed_form_F,
    total_valid_spans,
)

MAX_N = 7


def main():
    print("n   trees      total spans  (n+1)^(n-1)   average   e*n")
    for n in range(2, MAX_N + 1):
        total = total_valid_spans(n)
        avg = float(average_valid_spans(n))
        print(f"{n}   {n ** (n - 2):6d}   {total:12d}  {(n + 1) ** (n - 1):11d}"
              f"   {avg:7.3f}   {math.e * n:6.3f}")

    print()
    print("F(n, L): formula vs enumeration (multi-word spans of length <= L)")
    for n in range(3, MAX_N + 1):
        cells = []
        for L in range(2, n + 1):
            formula = closed_form_F(n, L)
            brute = brute_force_F(n, L)
            mark = "" if formula == Fraction(brute) else "  <-- MISMATCH"
            cells.append(f"L={L}: {brute}{mark}")
        print(f"n={n}:  " + "   ".join(cells))


if __name__ == "__main__":
    main()
