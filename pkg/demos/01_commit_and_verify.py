"""Walkthrough: commit to a polynomial, evaluate, verify, recover.

The prover holds f(x) = a_0 + a_1 x + ... + a_{d-1} x^{d-1} over GF(q)
with d = s**2.  Reshaped row-major into an s x s matrix A, evaluation is
the bilinear form highRow(x) . A . lowRow(x)^T, which is what makes an
O(sqrt(d))-per-round verifier possible.

Run:  python3 demos/01_commit_and_verify.py
"""

import random

from polycommit import PrimeField, keygen_prover, keygen_verifier, make_config
from polycommit.ot import IdealOt
from polycommit.polymat import bilinear_eval, horner_eval, poly_to_matrix
from polycommit.protocol import commit, evaluate, recover, verify

rng = random.Random(7)

# Parameters: GF(11), degree bound d = 9 (s = 3), verifier promises to
# query only x <= 6, so the four elements {7, 8, 9, 10} are reserved for
# the verifier's secret key points.
cfg = make_config(PrimeField(11), d=9, r=2, c=3, xi=6)
print(f"field GF({cfg.field.q}), d={cfg.d}, s={cfg.s}, reserved set {cfg.prohibited}")

# The prover's private polynomial and its matrix form.
coeffs = [cfg.field.sample(rng) for _ in range(cfg.d)]
a = poly_to_matrix(cfg.field, coeffs, cfg.s)
print(f"prover's coefficients: {coeffs}")
assert bilinear_eval(cfg.field, a, 5) == horner_eval(cfg.field, coeffs, 5)

# Keys: the verifier picks c lambda and c theta points from the reserved
# set; the prover draws a uniform mask matrix B.
verifier_key = keygen_verifier(cfg, rng)
prover_key = keygen_prover(cfg, rng)
print(f"verifier key points: lambdas={verifier_key.lambdas} thetas={verifier_key.thetas}")

# Commitment: 2c secure two-party computations give the verifier
# Gamma = Lambda(A+B) and Omega = B Theta^T.  Through the ideal OT box the
# prover learns nothing about the key points, and the verifier learns
# nothing about A+B and B beyond those projections.
vk = commit(a, verifier_key, prover_key, cfg, IdealOt(), rng)
print(f"verification key: Gamma {vk.gamma.shape}, Omega {vk.omega.shape}")

# Evaluation rounds.
for x in (0, 3, 6):
    resp = evaluate(x, a, prover_key, cfg)
    ok = verify(x, resp, vk, verifier_key, cfg)
    value = recover(x, resp, cfg)
    truth = horner_eval(cfg.field, coeffs, x)
    print(f"x={x}: verify={'accept' if ok else 'reject'}, recovered {value}, truth {truth}")
    assert ok and value == truth

# A forged response: flipping one coordinate of v breaks the left parity.
resp = evaluate(2, a, prover_key, cfg)
forged_v = resp.v.copy()
forged_v[0] = cfg.field.add(int(forged_v[0]), 1)
from polycommit import EvalResponse

forged = EvalResponse(v=forged_v, u=resp.u)
print(f"forged response at x=2: verify={'accept' if verify(2, forged, vk, verifier_key, cfg) else 'reject'}")

# Queries above the agreed bound are refused: the reserved set stays
# unevaluated, which is what keeps key rows and query rows independent.
from polycommit import RefusalError

try:
    evaluate(8, a, prover_key, cfg)
except RefusalError as exc:
    print(f"x=8: {exc}")
