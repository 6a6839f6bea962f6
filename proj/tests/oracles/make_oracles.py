"""Regenerates tests/unit/oracle_data.hpp.

Exact EMD costs come from scipy's LP solver (HiGHS) on the balanced
transportation problem; weighting values are re-evaluated with numpy directly
from the scheme formulas. Inputs are rounded to float32 first so the C++ side
sees exactly the same numbers.

    python3 tests/oracles/make_oracles.py > tests/unit/oracle_data.hpp
"""

import numpy as np
from scipy.optimize import linprog

rng = np.random.default_rng(20240611)


def f32(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


def cosine_cost(q, g):
    qn = q / np.linalg.norm(q, axis=1, keepdims=True)
    gn = g / np.linalg.norm(g, axis=1, keepdims=True)
    return np.clip(1.0 - qn @ gn.T, 0.0, 2.0)


def lp_emd(a, b, d):
    n, m = d.shape
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    res = linprog(d.ravel(), A_eq=a_eq, b_eq=np.concatenate([a, b]),
                  bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return res.fun


def weights(n):
    w = rng.uniform(0.05, 1.0, n)
    return w / w.sum()


def fmt(values):
    return ", ".join(f"{v:.9g}" for v in values)


def fmt17(values):
    return ", ".join(f"{v:.17g}" for v in values)


out = []
out.append("#pragma once")
out.append("")
out.append("// Generated by tests/oracles/make_oracles.py. Do not edit.")
out.append("")
out.append("#include <vector>")
out.append("")
out.append("namespace oracle {")
out.append("")
out.append("struct EmdCase {")
out.append("  int n;")
out.append("  int c;")
out.append("  std::vector<float> q;  // n x c")
out.append("  std::vector<float> g;  // n x c")
out.append("  std::vector<double> wq;")
out.append("  std::vector<double> wg;")
out.append("  double cost;")
out.append("};")
out.append("")
out.append("inline const std::vector<EmdCase>& emd_cases() {")
out.append("  static const std::vector<EmdCase> cases = {")
for n, c in [(2, 3), (3, 4), (4, 3), (5, 5), (5, 2), (6, 8), (8, 4), (12, 6)]:
    q = f32(rng.normal(size=(n, c)))
    g = f32(rng.normal(size=(n, c)))
    wq, wg = weights(n), weights(n)
    cost = lp_emd(wq, wg, cosine_cost(q, g))
    out.append(f"      {{{n}, {c},")
    out.append(f"       {{{fmt(q.ravel())}}},")
    out.append(f"       {{{fmt(g.ravel())}}},")
    out.append(f"       {{{fmt17(wq)}}},")
    out.append(f"       {{{fmt17(wg)}}},")
    out.append(f"       {cost:.17g}}},")
out.append("  };")
out.append("  return cases;")
out.append("}")
out.append("")

# Weighting: one 2x2 pair with C == D_img == 3.
q = f32(rng.normal(size=(4, 3)))
g = f32(rng.normal(size=(4, 3)))
q_img = f32(rng.normal(size=3))
g_img = f32(rng.normal(size=3))


def norm(raw):
    raw = np.maximum(raw, 0.0)
    s = raw.sum()
    return raw / s if s > 0 else np.full(len(raw), 1.0 / len(raw))


qn = q / np.linalg.norm(q, axis=1, keepdims=True)
gn = g / np.linalg.norm(g, axis=1, keepdims=True)
cos = qn @ gn.T
sc_q, sc_g = norm(cos.sum(axis=1)), norm(cos.sum(axis=0))
apc_q, apc_g = norm(q @ g.mean(axis=0)), norm(g @ q.mean(axis=0))
cc_q, cc_g = norm(q @ g_img), norm(g @ q_img)

out.append("// 2x2 grid, C = D_img = 3.")
out.append(f"inline const std::vector<float> kWeighQueryPatches = {{{fmt(q.ravel())}}};")
out.append(f"inline const std::vector<float> kWeighGalleryPatches = {{{fmt(g.ravel())}}};")
out.append(f"inline const std::vector<float> kWeighQueryImage = {{{fmt(q_img)}}};")
out.append(f"inline const std::vector<float> kWeighGalleryImage = {{{fmt(g_img)}}};")
for name, (wa, wb) in {"Sc": (sc_q, sc_g), "Apc": (apc_q, apc_g), "Cc": (cc_q, cc_g)}.items():
    out.append(f"inline const std::vector<double> k{name}Query = {{{fmt17(wa)}}};")
    out.append(f"inline const std::vector<double> k{name}Gallery = {{{fmt17(wb)}}};")
out.append("")
out.append("}  // namespace oracle")
print("\n".join(out))
