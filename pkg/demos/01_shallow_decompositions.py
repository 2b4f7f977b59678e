# # Shortening bag paths: bridges, highways and super-highways
#
# A tree decomposition of a low-treewidth graph can be deep, and the rounding
# of the lifted LP loses a factor that grows with the *combinatorial* length
# of bag paths.  This walkthrough builds a random partial k-tree, balances its
# decomposition, and then compares the three bag augmentations by width and
# by measured combinatorial diameter.

# In[1]:

from sparsecut.combdiam import DecPath, combinatorial_diameter, combinatorial_length_exact
from sparsecut.instance import generate_partial_ktree
from sparsecut.shallow import bridges, certified_diameter_bound, diameter_bound, highways, layer_spacing, super_highways
from sparsecut.treedec import balance, validate

# A random partial 3-tree on 60 vertices.  The generator returns the graph
# together with the decomposition it was grown from.

# In[2]:

inst, T = generate_partial_ktree(60, 3, keep_prob=0.7, seed=4)
print("raw decomposition: width", T.width, "depth", T.depth, "nodes", T.num_nodes)

B = balance(T)
print("balanced:          width", B.width, "depth", B.depth, "valid", validate(inst, B).ok)

# Combinatorial length can be much shorter than the plain path length.  The
# classic example is a path whose bags all share one vertex: every interior
# node can be bypassed.

# In[3]:

letters = ["ab", "abc", "acd", "ade", "aef", "afg", "a"]
path = DecPath.from_bags([set(map(ord, w)) for w in letters])
print("length", path.length, "-> combinatorial length", combinatorial_length_exact(path))
print("without the last bag:", combinatorial_length_exact(DecPath.from_bags([set(map(ord, w)) for w in letters[:-1]])))

# Now the three constructions.  Bridges trade width for diameter through the
# spacing `lam`; highways reach diameter 3 for every `lam`; super-highways use
# `q` nested layers of synchronization nodes.

# In[4]:

print(f"{'construction':<22}{'width':>6}{'diameter':>10}{'bound':>7}")
for lam in (1, 2, 3, B.depth):
    out = bridges(B, lam)
    d, _ = combinatorial_diameter(out)
    print(f"{'bridges lam=' + str(lam):<22}{out.width:>6}{d:>10}{diameter_bound('bridges', depth=B.depth, lam=lam):>7}")
for lam in (1, 2, 3):
    out = highways(B, lam)
    d, _ = combinatorial_diameter(out)
    print(f"{'highways lam=' + str(lam):<22}{out.width:>6}{d:>10}{3:>7}")
for q in (1, 2, 3):
    spacing = layer_spacing(B.width, B.depth, q)
    out = super_highways(B, q, spacing)
    d, _ = combinatorial_diameter(out)
    print(f"{'super-highways q=' + str(q):<22}{out.width:>6}{d:>10}{2 * q + 1:>7}   spacing {spacing}")

# The bounds are not just measured: each diameter lemma comes with an explicit
# bypass order.  `certified_diameter_bound` replays that order on every node
# pair and fails loudly if some pair gets stuck above the bound.

# In[5]:

H = highways(B, 2)
bound, traces = certified_diameter_bound(H, "highways", lam=2, sample=None)
worst = max(traces.values(), key=lambda tr: tr.initial.length)
print("certified bound", bound, "over", len(traces), "pairs")
print("longest traced pair:", worst.initial.nodes, "->", worst.final.nodes)
