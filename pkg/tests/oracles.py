"""Independent reference implementations used to freeze expected values.

Everything here is deliberately written the slow, obvious way (enumeration,
plain loops, extended precision) and shares no code with the package beyond
the public data types it checks.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from reuselab.lp import LinearProgram
from reuselab.mnl import MnlModel


def lp_enumerate(lp: LinearProgram, feas_tol: float = 1e-7):
    """Solve a small LP by enumerating basic solutions (candidate vertices).

    Requires every variable to be bounded (finite lower and upper), so the
    feasible region is a polytope and any optimum sits at a vertex.
    Returns (status, objective, x) with status "optimal" or "infeasible".
    """
    n = lp.n_vars
    lower = np.zeros(n) if lp.lower is None else np.asarray(lp.lower, float)
    if lp.upper is None or not np.all(np.isfinite(lp.upper)):
        raise ValueError("the enumeration oracle needs finite upper bounds")
    upper = np.asarray(lp.upper, float)

    rows = [np.asarray(lp.A, float)]
    kinds = list(lp.senses)
    rhs = list(np.asarray(lp.b, float))
    eye = np.eye(n)
    for i in range(n):
        rows.append(eye[i][None, :])
        kinds.append(">=")
        rhs.append(lower[i])
        rows.append(eye[i][None, :])
        kinds.append("<=")
        rhs.append(upper[i])
    G = np.vstack(rows)
    h = np.asarray(rhs, float)
    M = G.shape[0]

    combos = np.array(list(itertools.combinations(range(M), n)))
    Asub = G[combos]                      # (NC, n, n)
    bsub = h[combos]                      # (NC, n)
    dets = np.abs(np.linalg.det(Asub))
    keep = dets > 1e-9
    if not keep.any():
        return "infeasible", math.nan, None
    X = np.linalg.solve(Asub[keep], bsub[keep][..., None])[..., 0]

    res = X @ G.T                         # (K, M)
    tol = feas_tol * (1.0 + np.abs(h))
    ok = np.ones(X.shape[0], dtype=bool)
    for i, k in enumerate(kinds):
        if k == "<=":
            ok &= res[:, i] <= h[i] + tol[i]
        elif k == ">=":
            ok &= res[:, i] >= h[i] - tol[i]
        else:
            ok &= np.abs(res[:, i] - h[i]) <= tol[i]
    if not ok.any():
        return "infeasible", math.nan, None
    vals = X[ok] @ np.asarray(lp.c, float)
    best = int(np.argmax(vals))
    return "optimal", float(vals[best]), X[ok][best]


def enumerate_best_assortment(model: MnlModel, customer: int, coef) -> tuple:
    """Exhaustive minimizer of sum_{i in S} coef_i q_i(S) over |S| <= max_size."""
    coef = np.asarray(coef, float)
    v = model.attractions[customer]
    best, best_val = (), 0.0
    for size in range(1, model.max_size + 1):
        for s in itertools.combinations(range(model.n_products), size):
            idx = list(s)
            val = float(coef[idx] @ v[idx]) / (1.0 + float(v[idx].sum()))
            if val < best_val:
                best, best_val = s, val
    return best


def reference_select(ws, inst, customer: int, include_current: bool = True):
    """Extended-precision recomputation of the weighted argmin rule.

    Walks every action column of the customer's mean tables with explicit
    loops; ties resolve to the lowest action index, like the live rule.
    """
    om = inst.customers[customer].outcomes
    if om.is_null:
        return inst.actions.null_action
    s = ws.updates + 1
    L = ws.stage_len
    start = s if include_current else s + 1
    C = ws.caps.size
    log_phi = np.full(C, -np.inf, dtype=np.longdouble)
    for i in range(C):
        terms = []
        for t in range(start, L + 1):
            ls = ws.log_surv[i, t - s + 1]
            lr = ws.log_resource[i, t]
            if math.isfinite(ls) and math.isfinite(lr):
                terms.append(np.longdouble(ls) + np.longdouble(lr))
        if terms:
            m = max(terms)
            acc = np.longdouble(0.0)
            for v in terms:
                acc += np.exp(v - m)
            log_phi[i] = m + np.log(acc)
    log_psi = ws.log_reward_mag.astype(np.longdouble)
    both = [v for v in list(log_phi) + list(log_psi) if math.isfinite(float(v))]
    off = max(both) if both else np.longdouble(0.0)
    phi = np.exp(log_phi - off)
    psi = np.exp(log_psi - off)
    W, A = inst.mean_tables(customer)
    actions = inst.actions.all_actions()
    best_k, best_score = 0, None
    for k in range(len(actions)):
        score = phi @ A[:, k].astype(np.longdouble) - psi @ W[:, k].astype(np.longdouble)
        if best_score is None or score < best_score:
            best_k, best_score = k, score
    return actions[best_k]


def weights_closed_form(inst, config, stage_len: int, lam: float, eps_z: float, choices):
    """Stage weights after len(choices) updates, rebuilt by direct summation.

    Returns (log_resource, log_reward_mag) shaped like the live arrays
    (slot column 0 unused / -inf).  Slot t only ever receives updates from
    steps before it, so the formula sums over tau = 1..min(s, t-1).
    """
    eps, gamma, delta = config.epsilon, config.gamma, config.delta
    caps = inst.capacities()
    d = inst.durations()
    d_safe = np.where(d > 0, d, 1.0)
    C = inst.n_resources
    L = stage_len
    base = inst.survival_matrix(L + 1)
    surv = np.hstack([np.zeros((C, 1)), base])   # surv[:, u] = Pr(D >= u)
    means = [inst.customers[j].outcomes.means(k) for j, k in choices]
    s = len(means)

    log_res = np.full((C, L + 1), -np.inf)
    for i in range(C):
        with np.errstate(divide="ignore"):
            lead = math.log(eps * gamma) - math.log(caps[i]) - (gamma - delta) * math.log1p(eps)
        for t in range(1, L + 1):
            val = lead
            for u in range(1, t):
                val += math.log1p(eps * gamma * surv[i, u] / (d_safe[i] * (1.0 + eps)))
            for tau in range(1, min(s, t - 1) + 1):
                a = means[tau - 1][1][i]
                val += (gamma / caps[i]) * a * surv[i, t - tau + 1] * math.log1p(eps)
                val -= math.log1p(eps * gamma * surv[i, t - tau] / (d_safe[i] * (1.0 + eps)))
            log_res[i, t] = val

    log_shrink = math.log1p(-eps_z)
    log_drift = math.log1p(-eps_z * lam / (inst.w_max * (1.0 + eps)))
    init = (
        math.log(eps_z)
        - math.log(inst.w_max)
        + (L - 1) * log_drift
        - (1.0 - eps_z) * L * lam / inst.w_max * log_shrink
    )
    log_mag = np.full(inst.reward_count, init)
    for tau in range(s):
        log_mag += (means[tau][0] / inst.w_max) * log_shrink - log_drift
    return log_res, log_mag
