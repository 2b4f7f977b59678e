# # Why rounding loses only a factor quadratic in the path length
#
# Along a bag path from s to t the rounding is a Markov chain on the labels of
# consecutive bag intersections.  Laying those label sets out in layers gives a
# flow graph H.  The LP itself supplies a flow from "f(s) = 0" to "f(t) = 1",
# and a potential argument shows the walk must use a heavy cut of H.

# In[1]:

import random
from fractions import Fraction

from sparsecut.combdiam import simplify_exact
from sparsecut.instance import attach_random_demands, generate_partial_ktree
from sparsecut.lifting import lpcut, solution_from_cuts
from sparsecut.markov import build_H, check_lemmas, lp_flow, potential_profile
from sparsecut.rounding import algcut_exact, pair_path

# Instead of an LP optimum (which on tiny graphs is often integral) we use a
# mixture of random global cuts.  Any such mixture is a feasible point of the
# lifted LP, and its correlations make the walk forget information.

# In[2]:

inst, T = generate_partial_ktree(12, 1, keep_prob=1.0, seed=8)
inst = attach_random_demands(inst, 4, seed=8)
rng = random.Random(8)
cuts = {tuple(rng.randrange(2) for _ in range(inst.n)): Fraction(rng.randrange(1, 6)) for _ in range(5)}
sol = solution_from_cuts(inst, T, cuts)

# Pick the demand pair with the longest simplified path.

# In[3]:

best = max(inst.dem_edges, key=lambda e: simplify_exact(pair_path(T, e[0], e[1])).final_length)
s, t, _ = best
path = simplify_exact(pair_path(T, s, t)).final
H = build_H(path, sol, s, t)
print("pair", (s, t), "path", path.nodes, "layers", H.layer_sizes())

# The potential A(v) measures how much being at v still tells about f(s).
# Its variance phi(i) can only shrink along the walk.

# In[4]:

prof = potential_profile(H)
print("phi:", [str(x) for x in prof.phi])

flow = lp_flow(H)
print("LP flow value", flow.value, "= lpcut/2 =", lpcut(sol, s, t) / 2)

# `check_lemmas` evaluates each inequality exactly and reports slacks.

# In[5]:

rep = check_lemmas(H)
print("Pr[f(s)=0, f(t)=1] under rounding:", rep.p_s0_t1)
print("variance drop slack  ", rep.variance_slack)
print("threshold cut weight ", rep.threshold_weight, "<=", rep.threshold_bound)
print("max flow s0 -> t1    ", rep.mincut)
print("violations:", rep.violations() or "none")

ell = max(1, path.length)
alg = algcut_exact(T, sol, s, t, path=path)
print(f"algcut {alg} vs lpcut/(32 l^2) = {lpcut(sol, s, t) / (32 * ell * ell)}")
