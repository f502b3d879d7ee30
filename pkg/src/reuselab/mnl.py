"""Multinomial-logit demand with capped-cardinality assortments.

Products double as resources (index i is both the consumption and the
reward index): offering assortment S to customer j yields a purchase of at
most one product, product i with probability v_ij / (1 + sum_{l in S} v_lj)
where v_ij = exp(b_ij @ f_i) for product features f_i and customer taste
vectors b_ij.  A purchase consumes one unit of the product for a random
duration and earns its price.

Assortment optimization (the pricing step of column generation and the
per-arrival action choice of the adaptive policy) minimizes a linear
function sum_{i in S} coef_i q_i(S) over assortments of size at most n.
That problem is solved exactly by a small LP over choice-probability-like
variables whose vertices are assortments, so no enumeration is needed.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .lp import ENUMERATION_CAP, LinearProgram, NumericalBreakdown, solve_lp
from .model import (
    AssortmentActions,
    CustomerType,
    Instance,
    OutcomeModel,
    ResourceSpec,
)

__all__ = [
    "MnlModel",
    "MnlOutcomes",
    "AssortmentTooLarge",
    "best_assortment",
    "make_assortment_pricing",
    "enumerate_assortments",
    "build_mnl_instance",
]


class AssortmentTooLarge(ValueError):
    """An operation would enumerate more assortments than its cap allows."""


class MnlModel:
    """Logit attraction table plus prices and the assortment size cap.

    features: (N, F) product feature vectors.
    cust_features: (J, N, F) taste vectors, one per (customer, product).
    max_size: largest assortment a policy may offer.
    prices: (N,) per-unit rewards; defaults to all ones.
    """

    def __init__(self, features, cust_features, max_size, prices=None):
        self.features = np.asarray(features, dtype=float)
        self.cust_features = np.asarray(cust_features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be (n_products, n_features)")
        n, f = self.features.shape
        if self.cust_features.ndim != 3 or self.cust_features.shape[1:] != (n, f):
            raise ValueError("cust_features must be (n_customers, n_products, n_features)")
        if not 1 <= int(max_size):
            raise ValueError("max_size must be at least 1")
        self.max_size = min(int(max_size), n)
        if prices is None:
            prices = np.ones(n)
        self.prices = np.asarray(prices, dtype=float)
        if self.prices.shape != (n,) or np.any(self.prices < 0):
            raise ValueError("prices must be a nonnegative length-N vector")
        # attraction v_ij = exp(b_ij @ f_i), strictly positive
        self.attractions = np.exp(
            np.einsum("jnf,nf->jn", self.cust_features, self.features)
        )

    @property
    def n_products(self) -> int:
        return self.features.shape[0]

    @property
    def n_customers(self) -> int:
        return self.cust_features.shape[0]

    def action_space(self) -> AssortmentActions:
        return AssortmentActions(self.n_products, self.max_size)

    def choice_probability(self, customer: int, assortment) -> np.ndarray:
        """Purchase probability per product under the offered assortment."""
        q = np.zeros(self.n_products)
        if len(assortment) == 0:
            return q
        idx = np.fromiter(assortment, dtype=int)
        v = self.attractions[customer, idx]
        q[idx] = v / (1.0 + v.sum())
        return q

    def mean_outcomes(self, customer: int, assortment):
        """(expected reward, expected consumption) per product index."""
        q = self.choice_probability(customer, assortment)
        return self.prices * q, q

    def __eq__(self, other):
        return (
            isinstance(other, MnlModel)
            and self.max_size == other.max_size
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.cust_features, other.cust_features)
            and np.array_equal(self.prices, other.prices)
        )

    def __repr__(self):
        return (
            f"MnlModel(n_products={self.n_products}, "
            f"n_customers={self.n_customers}, max_size={self.max_size})"
        )


def best_assortment(model: MnlModel, customer: int, coef) -> tuple:
    """Assortment of size <= max_size minimizing sum_{i in S} coef_i q_i(S).

    Products with nonnegative coefficients are dropped up front (including
    one can never lower the objective: it contributes a nonnegative term
    and only dilutes the others).  The rest is an LP over variables
    (z_1..z_m, z_0) on the simplex with z_i <= v_i z_0 and
    sum z_i / v_i <= n z_0; its vertices put z_i / v_i at exactly z_0 for
    the members of an assortment, so reading off the tight ratios recovers
    the exact optimum without enumeration.
    """
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (model.n_products,):
        raise ValueError("one coefficient per product required")
    keep = np.where(coef < 0.0)[0]
    if keep.size == 0:
        return ()
    v = model.attractions[customer, keep]
    m = keep.size
    n = min(model.max_size, m)
    c = np.zeros(m + 1)
    c[:m] = -coef[keep]  # minimize coef @ z as a max problem
    A = np.zeros((2 + m, m + 1))
    senses = ["=="] + ["<="] * (1 + m)
    b = np.zeros(2 + m)
    A[0, :m] = 1.0
    A[0, m] = 1.0
    b[0] = 1.0
    A[1, :m] = 1.0 / v
    A[1, m] = -float(n)
    for r in range(m):
        A[2 + r, r] = 1.0 / v[r]
        A[2 + r, m] = -1.0
    sol = solve_lp(LinearProgram(c, A, senses, b))
    if sol.status != "optimal":
        raise NumericalBreakdown(f"assortment LP came back {sol.status}")
    z, z0 = sol.x[:m], sol.x[m]
    if z0 <= 0.0:
        raise NumericalBreakdown("assortment LP returned z_0 = 0")
    ratio = z / v / z0
    tight = ratio >= 1.0 - 1e-7
    if int(tight.sum()) > model.max_size:
        # numerical safety only: keep the largest ratios
        order = np.argsort(-ratio)[: model.max_size]
        tight = np.zeros(m, dtype=bool)
        tight[order] = True
    return tuple(int(i) for i in keep[tight])


def make_assortment_pricing(model: MnlModel, durations):
    """Column-generation pricing oracle for logit instances.

    Given knapsack duals alpha and reward duals rho (both per product), the
    best column for customer j minimizes
    sum_{i in S} (alpha_i d_i - rho_i r_i) q_i(S), a job for
    :func:`best_assortment`.  Customers beyond the logit table (the
    no-purchase type) price to the empty assortment.
    """
    d = np.asarray(durations, dtype=float)

    def pricing(j, alpha, rho):
        if j >= model.n_customers:
            n = model.n_products
            return (), np.zeros(n), np.zeros(n)
        coef = alpha * d - rho * model.prices
        s = best_assortment(model, j, coef)
        w, a = model.mean_outcomes(j, s)
        return s, w, a

    return pricing


def enumerate_assortments(n_products: int, max_size: int, cap: int = ENUMERATION_CAP):
    """All assortments of size <= max_size, size-major then lexicographic.

    Raises :class:`AssortmentTooLarge` past ``cap``; meant for small
    instances and cross-checks, not for optimization.
    """
    total = sum(math.comb(n_products, s) for s in range(0, max_size + 1))
    if total > cap:
        raise AssortmentTooLarge(f"{total} assortments exceeds cap {cap}")
    out = []
    for size in range(0, max_size + 1):
        out.extend(itertools.combinations(range(n_products), size))
    return out


class MnlOutcomes(OutcomeModel):
    """Choice outcomes of one logit customer (or of the no-purchase type).

    Consumption is the one-hot indicator of the purchased product (all
    zeros when the outside option wins) and reward is price times that
    indicator, so both caps are small: a_max = 1, w_max = max price.
    ``customer=None`` builds the never-purchasing null model.
    """

    def __init__(self, model: MnlModel, customer: int | None):
        self.model = model
        self.customer = customer
        if customer is not None and not 0 <= customer < model.n_customers:
            raise ValueError("customer index out of range")

    @property
    def is_null(self) -> bool:
        return self.customer is None

    def means(self, action):
        n = self.model.n_products
        if self.customer is None:
            return np.zeros(n), np.zeros(n)
        return self.model.mean_outcomes(self.customer, action)

    def sample(self, action, rng):
        n = self.model.n_products
        w = np.zeros(n)
        a = np.zeros(n)
        if self.customer is None or len(action) == 0:
            return w, a
        idx = np.fromiter(action, dtype=int)
        q = self.model.choice_probability(self.customer, action)[idx]
        pick = int(np.searchsorted(np.cumsum(q), rng.random(), side="right"))
        if pick < idx.size:
            i = idx[pick]
            a[i] = 1.0
            w[i] = self.model.prices[i]
        return w, a

    def consumption_bound(self, action):
        out = np.zeros(self.model.n_products)
        if self.customer is not None and len(action):
            out[np.fromiter(action, dtype=int)] = 1.0
        return out

    def bounds(self):
        if self.customer is None:
            return 0.0, 0.0
        prices = self.model.prices
        return (float(prices.max()) if prices.size else 0.0), 1.0

    def mean_matrix(self, space):
        if space.size > ENUMERATION_CAP:
            raise AssortmentTooLarge(
                f"mean tables over {space.size} assortments exceed the cap"
            )
        n = self.model.n_products
        if self.customer is None:
            z = np.zeros((n, space.size))
            return z, z.copy()
        member = space.membership_matrix().astype(float)  # (N, K)
        v = self.model.attractions[self.customer]
        denom = 1.0 + v @ member
        q = (v[:, None] * member) / denom[None, :]
        return self.model.prices[:, None] * q, q

    def __eq__(self, other):
        return (
            isinstance(other, MnlOutcomes)
            and self.customer == other.customer
            and self.model == other.model
        )

    def __repr__(self):
        who = "null" if self.customer is None else f"customer {self.customer}"
        return f"MnlOutcomes({who}, {self.model!r})"


def build_mnl_instance(
    model: MnlModel,
    capacities,
    survival_curves,
    horizon: int,
    arrival_weights,
) -> Instance:
    """Instance with one resource and one reward index per product.

    ``arrival_weights`` has one entry per logit customer plus a trailing
    no-purchase weight; the trailing entry becomes the designated null
    type.  Product prices land on the resources as unit prices and drive
    the reward outcomes.
    """
    n = model.n_products
    capacities = np.asarray(capacities, dtype=float)
    if capacities.shape != (n,):
        raise ValueError("one capacity per product required")
    if len(survival_curves) != n:
        raise ValueError("one survival curve per product required")
    weights = np.asarray(arrival_weights, dtype=float)
    if weights.shape != (model.n_customers + 1,):
        raise ValueError("arrival weights must cover every customer plus null")
    resources = [
        ResourceSpec(float(capacities[i]), survival_curves[i], float(model.prices[i]))
        for i in range(n)
    ]
    customers = [
        CustomerType(float(weights[j]), MnlOutcomes(model, j))
        for j in range(model.n_customers)
    ]
    customers.append(CustomerType(float(weights[-1]), MnlOutcomes(model, None)))
    return Instance(
        resources=resources,
        reward_count=n,
        customers=customers,
        actions=model.action_space(),
        horizon=horizon,
        null_type=model.n_customers,
    )
