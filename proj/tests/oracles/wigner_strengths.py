#!/usr/bin/env python3
"""Exact-arithmetic oracle for relative transition strengths and branching
ratios of the 87Rb D2 manifold (I=3/2, Jg=1/2, Je=3/2), via sympy's Wigner
3j/6j symbols in rational arithmetic.

Strengths are squared dipole matrix elements normalized to the cycling
transition |F=2,m=2> -> |F'=3,m'=3| (q=+1).

Emits C++ tables (exact numerator/denominator pairs) for the test suite.
"""
from fractions import Fraction
from sympy import Rational, sqrt
from sympy.physics.wigner import wigner_3j, wigner_6j

I = Rational(3, 2)
Jg = Rational(1, 2)
Je = Rational(3, 2)

def strength2(Fg, mg, Fe, me, q):
    """|<Fe me|d_q|Fg mg>|^2 in units with the reduced J-element = 1."""
    if me - mg != q:
        return Rational(0)
    w3 = wigner_3j(Fe, 1, Fg, -me, q, mg)
    w6 = wigner_6j(Jg, Je, 1, Fe, Fg, I)
    val = (2*Fe + 1) * (2*Fg + 1) * w3**2 * w6**2
    return val

CYC = strength2(2, 2, 3, 3, 1)
assert CYC != 0

grounds = [(1, m) for m in range(-1, 2)] + [(2, m) for m in range(-2, 3)]
exciteds = [(F, m) for F in range(0, 4) for m in range(-F, F + 1)]

def rel(Fg, mg, Fe, me, q):
    return Fraction(str(strength2(Fg, mg, Fe, me, q) / CYC))

print("// generated by wigner_strengths.py -- exact relative strengths")
print("// entries: Fg, mg, Fe, me, q, num, den")
print("inline constexpr StrengthEntry kStrengthTable[] = {")
n = 0
for (Fg, mg) in grounds:
    for (Fe, me) in exciteds:
        for q in (-1, 0, 1):
            if me - mg != q:
                continue
            r = rel(Fg, mg, Fe, me, q)
            print(f"    {{{Fg}, {mg}, {Fe}, {me}, {q}, {r.numerator}, {r.denominator}}},")
            n += 1
print("};")
print(f"// {n} allowed (Fg,mg)->(Fe,me,q) geometry entries (zeros excluded)")

print()
print("// branching ratios: excited (Fe,me) -> ground (Fg,mg), exact")
print("inline constexpr BranchEntry kBranchTable[] = {")
for (Fe, me) in exciteds:
    tot = sum(rel(Fg, mg, Fe, me, me - mg) for (Fg, mg) in grounds
              if abs(me - mg) <= 1)
    for (Fg, mg) in grounds:
        q = me - mg
        if abs(q) > 1:
            continue
        s = rel(Fg, mg, Fe, me, q)
        if s == 0:
            continue
        b = s / tot
        print(f"    {{{Fe}, {me}, {Fg}, {mg}, {b.numerator}, {b.denominator}}},")
print("};")

# Spot values of interest
print()
print("// spot checks (as fractions of the cycling strength):")
for (label, v) in [
    ("|2,0> -> F'=2,m=0, q=0 (forbidden)", rel(2, 0, 2, 0, 0)),
    ("|2,0> -> |3,0>, q=0", rel(2, 0, 3, 0, 0)),
    ("|2,1> -> |3,1>, q=0", rel(2, 1, 3, 1, 0)),
    ("|2,2> -> |3,2>, q=0", rel(2, 2, 3, 2, 0)),
    ("|2,0> -> F'=1,m=0, q=0", rel(2, 0, 1, 0, 0)),
    ("|2,1> -> F'=2,m=1, q=0", rel(2, 1, 2, 1, 0)),
]:
    print(f"//   {label}: {v}")
