"""Independent reference values frozen into the C++ tests.

Run with: python3 tests/oracles/oracles.py
Uses mpmath (50 digits) and scipy; shares no code with the library.
"""

import itertools

import mpmath as mp
import numpy as np
from scipy import optimize, stats

mp.mp.dps = 50


def show(name, value):
    print(f"{name} = {mp.nstr(mp.mpf(value), 17)}")


# Two experts, q = (1/2, 1/2), L_1 = (1, 0), round n = 2.
w = [mp.mpf(1) / 2 * mp.e ** (-1 / mp.sqrt(2)), mp.mpf(1) / 2]
show("weights_p1", w[0] / sum(w))
show("weights_p2", w[1] / sum(w))

# (L^2 e^L + ln 1/q) sqrt(N) at L = 1, q = 1/8, N = 100.
show("lemma5_1_eighth_100", (mp.e + mp.log(8)) * 10)

# sqrt(2.01 L^2 N ln ln N).
show("lil_1_3", mp.sqrt(mp.mpf("2.01") * 3 * mp.log(mp.log(3))))
show("lil_2_1000", mp.sqrt(mp.mpf("2.01") * 4 * 1000 * mp.log(mp.log(1000))))

# Chi-square upper critical values at significance 1e-4.
for df in range(1, 8):
    print(f"chi2_crit_df{df} = {stats.chi2.isf(1e-4, df):.6f}")


# Per-round gap for three constant experts under square loss, written
# straight from the definitions with beta_n = exp(-1/sqrt(n)):
#   gap_N = sum_n A_n - sum_n log_{beta_n} sum_k p_k beta_n^{l_k}
#           + log_{beta_N} sum_k q_k beta_N^{L_N^(k)} - L_N,
# where L_N is the learner's own loss with gamma_n = sum_k p_k g_k.
def lemma9_gaps(priors, points, ys):
    k = len(priors)
    cumulative = [mp.mpf(0)] * k
    learner = mp.mpf(0)
    ab = mp.mpf(0)
    out, predictions = [], []
    for n, y in enumerate(ys, start=1):
        beta = mp.e ** (-1 / mp.sqrt(n))
        w = [priors[j] * beta ** cumulative[j] for j in range(k)]
        p = [x / sum(w) for x in w]
        row = [(g - y) ** 2 for g in points]
        gamma = sum(p[j] * points[j] for j in range(k))
        predictions.append(gamma)
        a = sum(p[j] * row[j] for j in range(k))
        b = mp.log(sum(p[j] * beta ** row[j] for j in range(k))) / mp.log(beta)
        ab += a - b
        learner += (gamma - y) ** 2
        cumulative = [cumulative[j] + row[j] for j in range(k)]
        c = mp.log(sum(priors[j] * beta ** cumulative[j] for j in range(k))) / mp.log(beta)
        out.append(ab + c - learner)
    return out, predictions


priors = [mp.mpf(1) / 2, mp.mpf(1) / 4, mp.mpf(1) / 8]
points = [mp.mpf(0), mp.mpf(1), mp.mpf(1) / 2]
ys = [mp.mpf(v) for v in ("0.2", "0.9", "0.5", "1.0", "0.0")]
gaps, predictions = lemma9_gaps(priors, points, ys)
for n, (g, pr) in enumerate(zip(gaps, predictions), start=1):
    show(f"lemma9_gap_round{n}", g)
    show(f"prediction_round{n}", pr)


# Fortet-Mourier distance by a generic LP (scipy HiGHS), with
# rho = sup_y |lambda(g, y) - lambda(g', y)| for square loss on Y = [0, 1].
def rho_square(g, h):
    ys = np.linspace(0.0, 1.0, 100001)
    return float(np.max(np.abs((g - ys) ** 2 - (h - ys) ** 2)))


def fm(mu, nu):
    pts = sorted(set(mu) | set(nu))
    n = len(pts)
    w = np.array([mu.get(p, 0.0) - nu.get(p, 0.0) for p in pts])
    # variables f_0..f_{n-1}, a (Lipschitz), s (sup); maximize w.f
    c = np.concatenate([-w, [0.0, 0.0]])
    rows, rhs = [], []
    for i in range(n):
        r = np.zeros(n + 2); r[i] = 1; r[n + 1] = -1; rows.append(r); rhs.append(0)
        r = np.zeros(n + 2); r[i] = -1; r[n + 1] = -1; rows.append(r); rhs.append(0)
    for i, j in itertools.permutations(range(n), 2):
        r = np.zeros(n + 2); r[i] = 1; r[j] = -1; r[n] = -rho_square(pts[i], pts[j]); rows.append(r); rhs.append(0)
    r = np.zeros(n + 2); r[n] = 1; r[n + 1] = 1; rows.append(r); rhs.append(1)
    bounds = [(None, None)] * n + [(0, None), (0, None)]
    res = optimize.linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    return -res.fun


cases = {
    "fm_case1": ({0.0: 0.5, 1.0: 0.5}, {0.5: 1.0}),
    "fm_case2": ({0.0: 0.25, 0.5: 0.25, 1.0: 0.5}, {0.0: 0.5, 0.5: 0.5}),
    "fm_case3": ({0.2: 0.7, 0.9: 0.3}, {0.4: 0.4, 0.6: 0.6}),
}
for name, (mu, nu) in cases.items():
    print(f"{name} = {fm(mu, nu):.12f}")

# Hierarchical prior for levels 1..3, palette of 3: q = 2^-m / Z * 3^-(2^m).
z = sum(mp.mpf(2) ** -m for m in (1, 2, 3))
for m in (1, 2, 3):
    show(f"hier_log_prior_m{m}", mp.log(mp.mpf(2) ** -m / z * mp.mpf(3) ** -(2 ** m)))
# Analytic thresholds at eps = 2^-m for those priors, L = 1.
for m in (1, 2, 3):
    q = mp.mpf(2) ** -m / z * mp.mpf(3) ** -(2 ** m)
    print(f"threshold_m{m} = {int(mp.ceil((2 * (mp.e - mp.log(q)) / mp.mpf(2) ** -m) ** 2))}")
