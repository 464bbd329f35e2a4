"""Smoke test for the Python bindings: `maturin develop -m crates/python/Cargo.toml`, then run this."""

import json

import pymicromorph as mm

DECL = """dims: 1 1
phi: x1 + x1^2
f: p1^3
amplitude: 1 + hbar*p1
"""
IDENTITY = "dims: 1 1\nphi: x1\n"


def main():
    canonical = mm.parse(DECL, truncation=6, hbar_order=2)
    print(canonical, end="")
    assert mm.compose(IDENTITY, DECL, truncation=6, hbar_order=2) == canonical

    d = json.loads(mm.dump(DECL))
    assert d["dims"] == [1, 1] and d["exact"]

    assert mm.hj("0", dim=1) == "p1*x1"
    assert mm.bch_series("heisenberg", 3)[2] == "p3 + q3 + 1/2*p1*q2 - 1/2*p2*q1"
    print("state:", mm.apply(DECL, "x1^2"))

    try:
        mm.compose(DECL, "dims: 2 2\nphi:\n  x1\n  x2\n")
    except mm.DimensionError as e:
        print("dimension error:", e)
    else:
        raise AssertionError("expected DimensionError")

    try:
        mm.parse("dims: 1 1\nphi: x1 +\n")
    except mm.ParseError as e:
        print("parse error:", e)
    else:
        raise AssertionError("expected ParseError")

    ok, report = mm.verify("hj")
    assert ok, report
    print("smoke ok")


if __name__ == "__main__":
    main()
