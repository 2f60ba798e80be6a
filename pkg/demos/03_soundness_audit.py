"""Walkthrough: the soundness bound, exactly and by Monte Carlo.

A forged response differs from the honest one by a nonzero polynomial of
degree below s.  It slips past a parity check only if every secret key
point (lambda**s on the left, theta on the right) is one of that
polynomial's roots.  With t roots inside the reserved set's image and c
key points drawn from r(s-1) candidates, the exact acceptance probability
is C(t, c)/C(r(s-1), c) <= 1/r**c per side.

Run:  python3 demos/03_soundness_audit.py
"""

from fractions import Fraction
from math import comb

from polycommit import PrimeField, make_config, substream
from polycommit.audit import (
    RandomPerturbation,
    RootCrafting,
    monte_carlo_detection,
    soundness_exact,
)

f = PrimeField(11)
rng = substream(2024, "demo", "soundness")

cfg1 = make_config(f, d=9, r=2, c=1, xi=6)
print(f"reserved set {cfg1.prohibited}; its cubed image "
      f"{[f.pow(y, 3) for y in cfg1.prohibited]}")

# Exact oracle: delta(y) = (y - 7^3)(y - 8^3) has both roots in the image,
# so with c = 1 the forgery passes for 2 of the 4 possible keys.
delta = f.asarray([1, 3, 1])  # y^2 + 3y + 1 = (y-2)(y-6) mod 11
p = soundness_exact(f, delta, cfg1.prohibited, c=1, s=3, side="v")
print(f"crafted two-root perturbation: exact acceptance {p} (= 1/r^c)")

# The best any key-oblivious adversary can do is plant s-1 = 2 roots:
for c in (1, 2, 3):
    bound = Fraction(comb(2, c), comb(4, c))
    print(f"  c={c}: best possible acceptance {bound} <= 1/r^c = {Fraction(1, 2**c)}")

# Monte Carlo against fresh keys every trial, compared with the exact
# oracle applied to each sampled perturbation.
for c, adversary, trials in (
    (1, RandomPerturbation(), 20000),
    (1, RootCrafting(), 20000),
    (3, RandomPerturbation(), 20000),
    (3, RootCrafting(), 5000),
):
    cfg = make_config(f, d=9, r=2, c=c, xi=6)
    rep = monte_carlo_detection(adversary, cfg, trials, rng)
    print(
        f"c={c} {adversary.name:>19}: measured {rep.rate:.4f} vs exact "
        f"{rep.exact_mean:.4f} ({trials} trials, within 3 sigma: {rep.within(3)})"
    )
print("with c=3 any perturbation polynomial (degree < 3) is short of roots: "
      "acceptance is exactly zero")
