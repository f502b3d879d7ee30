"""Instance files and trace dumps.

Instance JSON (version 1): top-level ``horizon``, ``reward_count``,
``null_type``; ``resources`` as [{capacity, survival, unit_price}];
``actions`` as {"kind": "explicit", count, null_action} or
{"kind": "assortment", n_products, max_size}; ``customers`` as
[{weight, outcomes}].  Logit instances carry one shared ``mnl`` block
{m, n, products: [{f, price}], customers: [{b}]} (m the assortment size
cap, n the product count, b one taste matrix per customer) and their
per-customer outcome stubs are {"kind": "mnl", "customer": j or null}.

Floats use shortest round-trip encoding and keys are emitted sorted, so
saving the same instance twice produces identical bytes and a save/load
cycle reproduces every number exactly.

Traces dump as JSON lines, one step per line.
"""

from __future__ import annotations

import json

import numpy as np

from .mnl import MnlModel, MnlOutcomes
from .model import (
    AssortmentActions,
    CustomerType,
    ExplicitActions,
    ExplicitOutcomes,
    Instance,
    ResourceSpec,
    SurvivalCurve,
)

__all__ = [
    "instance_to_json",
    "instance_from_json",
    "save_instance",
    "load_instance",
    "trace_to_jsonl",
]

_FORMAT = "reusable-allocation-instance"
_VERSION = 1


def _actions_to_dict(space):
    if isinstance(space, ExplicitActions):
        return {"kind": "explicit", "count": space.count, "null_action": space.null_action}
    if isinstance(space, AssortmentActions):
        return {
            "kind": "assortment",
            "n_products": space.n_products,
            "max_size": space.max_size,
        }
    raise TypeError(f"cannot serialize action space {type(space).__name__}")


def _outcomes_to_dict(om):
    if isinstance(om, MnlOutcomes):
        return {"kind": "mnl", "customer": om.customer}
    if isinstance(om, ExplicitOutcomes):
        return {
            "kind": "explicit",
            "rewards": om.rewards.tolist(),
            "consumption": om.consumption.tolist(),
            "noise": om.noise,
            "reward_cap": om.reward_cap,
            "consumption_cap": om.consumption_cap,
        }
    raise TypeError(f"cannot serialize outcome model {type(om).__name__}")


def instance_to_json(inst: Instance) -> str:
    mnl_model = None
    for cust in inst.customers:
        if isinstance(cust.outcomes, MnlOutcomes):
            mnl_model = cust.outcomes.model
            break
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "horizon": inst.horizon,
        "reward_count": inst.reward_count,
        "null_type": inst.null_type,
        "resources": [
            {
                "capacity": r.capacity,
                "survival": np.asarray(r.survival.surv, dtype=float).tolist(),
                "unit_price": r.unit_price,
            }
            for r in inst.resources
        ],
        "actions": _actions_to_dict(inst.actions),
        "customers": [
            {"weight": c.weight, "outcomes": _outcomes_to_dict(c.outcomes)}
            for c in inst.customers
        ],
    }
    if mnl_model is not None:
        doc["mnl"] = {
            "m": mnl_model.max_size,
            "n": mnl_model.n_products,
            "products": [
                {"f": mnl_model.features[i].tolist(), "price": float(mnl_model.prices[i])}
                for i in range(mnl_model.n_products)
            ],
            "customers": [
                {"b": mnl_model.cust_features[j].tolist()}
                for j in range(mnl_model.n_customers)
            ],
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise ValueError(f"not an instance file (format={doc.get('format')!r})")
    if doc.get("version") != _VERSION:
        raise ValueError(f"unsupported instance version {doc.get('version')!r}")
    mnl_model = None
    if "mnl" in doc:
        blk = doc["mnl"]
        mnl_model = MnlModel(
            features=[p["f"] for p in blk["products"]],
            cust_features=[c["b"] for c in blk["customers"]],
            max_size=blk["m"],
            prices=[p["price"] for p in blk["products"]],
        )
    resources = [
        ResourceSpec(
            capacity=r["capacity"],
            survival=SurvivalCurve(r["survival"]),
            unit_price=r.get("unit_price", 0.0),
        )
        for r in doc["resources"]
    ]
    ad = doc["actions"]
    if ad["kind"] == "explicit":
        actions = ExplicitActions(ad["count"], ad["null_action"])
    elif ad["kind"] == "assortment":
        actions = AssortmentActions(ad["n_products"], ad["max_size"])
    else:
        raise ValueError(f"unknown action space kind {ad['kind']!r}")
    customers = []
    for c in doc["customers"]:
        od = c["outcomes"]
        if od["kind"] == "explicit":
            om = ExplicitOutcomes(
                od["rewards"],
                od["consumption"],
                noise=od["noise"],
                reward_cap=od["reward_cap"],
                consumption_cap=od["consumption_cap"],
            )
        elif od["kind"] == "mnl":
            if mnl_model is None:
                raise ValueError("mnl outcome stub without an mnl block")
            om = MnlOutcomes(mnl_model, od["customer"])
        else:
            raise ValueError(f"unknown outcome kind {od['kind']!r}")
        customers.append(CustomerType(weight=c["weight"], outcomes=om))
    return Instance(
        resources=resources,
        reward_count=doc["reward_count"],
        customers=customers,
        actions=actions,
        horizon=doc["horizon"],
        null_type=doc["null_type"],
    )


def save_instance(path, inst: Instance):
    with open(path, "w") as fh:
        fh.write(instance_to_json(inst))


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(fh.read())


def _action_json(action):
    if isinstance(action, tuple):
        return list(action)
    return int(action)


def trace_to_jsonl(trace, fh):
    """One JSON object per recorded step (run the episode with record_steps)."""
    for st in trace.steps:
        fh.write(
            json.dumps(
                {
                    "t": st.step,
                    "customer": st.customer,
                    "chosen": _action_json(st.chosen),
                    "executed": _action_json(st.executed),
                    "forced": st.forced,
                    "reward": np.asarray(st.reward, dtype=float).tolist(),
                    "consumption": np.asarray(st.consumption, dtype=float).tolist(),
                    "durations": {str(i): int(d) for i, d in sorted(st.durations.items())},
                },
                sort_keys=True,
            )
            + "\n"
        )
