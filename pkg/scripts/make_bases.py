#!/usr/bin/env python3
"""Write level-one cusp-form bases as JSON q-expansion files.

All arithmetic is exact integer arithmetic on truncated power series:

    Delta = q * prod_{n>=1} (1 - q^n)^24           (weight 12)
    E4    = 1 + 240 * sum_{n>=1} sigma_3(n) q^n     (weight 4)

The weight-24 space is spanned by Delta^2 and Delta * E4^3.

Usage:  python3 scripts/make_bases.py [OUTDIR]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path


def mul(a: list[int], b: list[int], n: int) -> list[int]:
    """Product of two series truncated to indices < n."""
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                out[i + j] += ai * bj
    return out


def delta_series(n: int) -> list[int]:
    # prod (1 - q^k)^24 up to q^{n-1}, then shift by one
    prod = [1] + [0] * (n - 1)
    for k in range(1, n):
        for _ in range(24):
            for i in range(n - 1, k - 1, -1):
                prod[i] -= prod[i - k]
    return [0] + prod[: n - 1]


def e4_series(n: int) -> list[int]:
    return [1] + [240 * sum(d**3 for d in range(1, k + 1) if k % d == 0) for k in range(1, n)]


def basis_record(label: str, weight: int, truncation: int, forms: list[list[int]],
                 as_strings: bool) -> dict:
    coeffs = [f[1 : truncation + 1] for f in forms]
    if as_strings:
        coeffs = [[str(c) for c in f] for f in coeffs]
    return {"label": label, "weight": weight, "truncation": truncation, "forms": coeffs}


def main(argv: list[str]) -> int:
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parents[1] / "src/bergman_lab/data"
    out.mkdir(parents=True, exist_ok=True)

    n12 = 120
    delta = delta_series(n12 + 1)
    rec12 = basis_record("delta", 12, n12, [delta], as_strings=False)

    n24 = 240
    d = delta_series(n24 + 1)
    e4 = e4_series(n24 + 1)
    d2 = mul(d, d, n24 + 1)
    de43 = mul(d, mul(e4, mul(e4, e4, n24 + 1), n24 + 1), n24 + 1)
    rec24 = basis_record("delta2_delta_e4cubed", 24, n24, [d2, de43], as_strings=True)

    for name, rec in (("weight12.json", rec12), ("weight24.json", rec24)):
        with open(out / name, "w") as fh:
            json.dump(rec, fh, indent=1)
            fh.write("\n")
        print(f"wrote {out / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
