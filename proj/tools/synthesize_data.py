#!/usr/bin/env python3
"""Regenerates data/ieee118.m (synthetic line ratings) and data/wind25.json.

The IEEE 118-bus case carries no thermal ratings, so RATE_A is synthesized
as the largest of
  * a floor,
  * KAPPA times the flow under a capacity-proportional dispatch of the base load,
  * (MEAN_SHARE * |f| + Z * s) / LIMIT_FACTOR, where f is the flow with the
    fleet at its mean output and 75 % penetration of the stressed load, and s
    the flow standard deviation at 125 % penetration under capacity-proportional
    AGC.
The last term keeps all penetration levels feasible after the limit stress
while lines next to large plants stay congested. Ratings are rounded up to
10 MW.

The wind fleet is 25 plants with exponential-decay correlation in bus number;
buses 85 and 117 carry the largest forecasts (and therefore deviations).

usage: synthesize_data.py SOURCE_CASE118_M OUT_DIR
"""
import json
import math
import re
import sys

import numpy as np

KAPPA = 2.0
FLOOR_MW = 50.0
MEAN_SHARE = 0.7
Z = 2.6
LOAD_FACTOR = 1.25
LIMIT_FACTOR = 0.75
CORRELATION_LENGTH = 20.0
STD_FRACTION = 0.10
WIND_BUSES = [3, 8, 14, 17, 22, 28, 33, 39, 44, 47, 50, 53, 58, 63, 67,
              71, 75, 79, 84, 85, 94, 98, 102, 109, 117]
HEAVY = {85: 2.5, 117: 2.5}


def block(text, name):
    m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S)
    rows = []
    for line in m.group(1).split("\n"):
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(x) for x in line.split()])
    return np.array(rows), m.span(1)


def ptdf(bus, branch, ref):
    ids = [int(b) for b in bus[:, 0]]
    pos = {b: i for i, b in enumerate(ids)}
    n, m = len(ids), len(branch)
    bf = np.zeros((m, n))
    bbus = np.zeros((n, n))
    for l, br in enumerate(branch):
        f, t = pos[int(br[0])], pos[int(br[1])]
        b = 1.0 / br[3]
        bf[l, f] += b
        bf[l, t] -= b
        bbus[f, f] += b
        bbus[t, t] += b
        bbus[f, t] -= b
        bbus[t, f] -= b
    keep = [i for i in range(n) if i != pos[ref]]
    out = np.zeros((m, n))
    out[:, keep] = bf[:, keep] @ np.linalg.inv(bbus[np.ix_(keep, keep)])
    return out, pos


def main(src, out_dir):
    text = open(src).read()
    bus, _ = block(text, "bus")
    gen, _ = block(text, "gen")
    branch, span = block(text, "branch")
    ref = int(bus[bus[:, 1] == 3][0, 0])
    M, pos = ptdf(bus, branch, ref)

    load = bus[:, 2]
    share = gen[:, 8] / gen[:, 8].sum()
    inj = -load.copy()
    for g, s in zip(gen, share):
        inj[pos[int(g[0])]] += s * load.sum()
    flow_base = M @ inj

    rng = np.random.default_rng(20151001)
    weights = np.array([HEAVY.get(b, float(rng.uniform(0.6, 1.4))) for b in WIND_BUSES])
    n = len(WIND_BUSES)
    rho = np.array([[math.exp(-abs(WIND_BUSES[i] - WIND_BUSES[j]) / CORRELATION_LENGTH)
                     for j in range(n)] for i in range(n)]).round(6)
    assert np.linalg.eigvalsh(rho).min() > 0

    stressed = LOAD_FACTOR * load
    mu75 = weights / weights.sum() * 0.75 * stressed.sum()
    inj = -stressed.copy()
    for b, m in zip(WIND_BUSES, mu75):
        inj[pos[b]] += m
    for g, s in zip(gen, share):
        inj[pos[int(g[0])]] += s * (stressed.sum() - mu75.sum())
    flow75 = M @ inj

    sd125 = STD_FRACTION * mu75 * 125.0 / 75.0
    cov = np.outer(sd125, sd125) * rho
    agc = np.zeros(len(bus))
    for g, s in zip(gen, share):
        agc[pos[int(g[0])]] += s
    coef = M[:, [pos[b] for b in WIND_BUSES]] - (M @ agc)[:, None]
    sigma = np.sqrt(np.einsum("lj,jk,lk->l", coef, cov, coef))

    need = (MEAN_SHARE * np.abs(flow75) + Z * sigma) / LIMIT_FACTOR
    rating = np.maximum.reduce([KAPPA * np.abs(flow_base), need, np.full(len(branch), FLOOR_MW)])
    rating = np.ceil(rating / 10.0) * 10.0

    rows = []
    for br, r in zip(branch, rating):
        vals = list(br)
        vals[5] = r
        rows.append("\t" + "\t".join("%.10g" % v for v in vals) + ";")
    body = "\n" + "\n".join(rows) + "\n"
    note = ("% RATE_A values are synthetic (the source case has none); see\n"
            "% tools/synthesize_data.py for the rule that produced them.\n")
    new_text = text[:span[0]] + body + text[span[1]:]
    new_text = new_text.replace("%%-----  Power Flow Data  -----%%", note + "\n%%-----  Power Flow Data  -----%%", 1)
    with open(out_dir + "/ieee118.m", "w") as f:
        f.write(new_text)

    # Means are stored relative to the unstressed load; the CLI rescales them
    # to the requested penetration anyway.
    plants = [{"bus": b, "mean_mw": round(float(m) / LOAD_FACTOR, 3), "policy": {"type": "reserve"}}
              for b, m in zip(WIND_BUSES, mu75)]
    fleet = {
        "description": "Synthetic 25-plant fleet; rho_ij = exp(-|bus_i - bus_j| / %g), "
                       "std = %g x mean" % (CORRELATION_LENGTH, STD_FRACTION),
        "std_fraction": STD_FRACTION,
        "plants": plants,
        "correlation": rho.tolist(),
    }
    with open(out_dir + "/wind25.json", "w") as f:
        json.dump(fleet, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
