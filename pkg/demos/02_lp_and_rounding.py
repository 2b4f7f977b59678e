# # From the lifted LP to an actual cut
#
# The relaxation keeps one distribution per (bag, demand pair) over labellings
# of the bag plus the pair, with neighbouring distributions forced to agree.
# Its optimum `alpha` lower-bounds the sparsest cut `phi`.  Rounding samples
# bag by bag, conditioning on what the previous bag already fixed.

# In[1]:

from fractions import Fraction

from sparsecut.instance import attach_random_demands, generate_partial_ktree, sparsity
from sparsecut.lifting import build_lifted_lp, lpcut, solve_ratio
from sparsecut.oracle import brute_force
from sparsecut.rounding import algcut_estimate, algcut_exact, repeated_round, sc_round
from sparsecut.treedec import balance

# A small instance, so that the brute-force oracle can tell us the truth.

# In[2]:

inst, T = generate_partial_ktree(10, 2, keep_prob=0.8, seed=21)
inst = attach_random_demands(inst, 3, seed=21)
T = balance(T)
lifted = build_lifted_lp(inst, T)
print("decomposition nodes", T.num_nodes, "| LP variables", lifted.lp.num_vars, "| rows", lifted.lp.num_rows)

# Solving is exact: a rational simplex inside a Dinkelbach loop on the ratio
# of expected capacity to expected separated demand.

# In[3]:

sol = solve_ratio(inst, T)
oracle = brute_force(inst)
print("alpha iterates:", [str(a) for a in sol.history])
print("alpha =", sol.alpha, " phi =", oracle.phi)

# One rounding run gives a labelling of every vertex.

# In[4]:

run = sc_round(T, sol, T.root, seed=7)
print("bag order", run.order)
print("labels   ", run.assignment)

# For every demand pair the LP separation probability (lpcut) can be compared
# with the exact probability that the rounding separates the pair (algcut),
# and with a Monte Carlo estimate of it.

# In[5]:

for s, t, _ in inst.dem_edges:
    exact = algcut_exact(T, sol, s, t)
    est, half = algcut_estimate(T, sol, s, t, trials=5000, seed=1)
    print(f"pair ({s},{t}): lpcut {lpcut(sol, s, t)}  algcut {exact}  estimate {est:.3f} +- {half:.3f}")

# Repeating the rounding and keeping the sparsest cut recovers a cut whose
# ratio is close to `alpha`; here it matches the oracle.

# In[6]:

best = repeated_round(inst, T, sol, trials=200, seed=3)
print("best rounded sparsity", best.sparsity, "| fraction of good runs", best.good_fraction)
print("check:", sparsity(inst, best.assignment) == best.sparsity, best.sparsity >= oracle.phi)
