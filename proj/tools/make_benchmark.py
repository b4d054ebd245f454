#!/usr/bin/env python3
"""Writes data/benchmark17.json, the 17-node MV test feeder pair.

Line lengths follow the Cigre MV benchmark where available; the HV bus is
node 16 and feeds both feeder heads through the primary transformers.
"""
import cmath
import json
import math
import sys

F = 50.0
W = 2 * math.pi * F
V_LL = 20e3
V_PH = V_LL / math.sqrt(3)

# single cable type (ohm/km, F/km)
Z1 = complex(0.501, 0.716)
Z0 = complex(0.817, 1.598)
C1 = 0.151e-6

LINES = [  # from, to, km
    (1, 2, 2.82), (2, 3, 4.42), (3, 4, 0.61), (4, 5, 0.56), (5, 6, 1.54),
    (3, 8, 1.30), (8, 7, 1.67), (8, 9, 0.32), (9, 10, 0.77), (10, 11, 0.33),
    (1, 17, 2.00), (12, 13, 4.89), (13, 14, 2.99), (12, 15, 1.50),
]
TRANSFORMERS = [(16, 1), (16, 12)]
Z_TRAFO = complex(0.128, 1.916)

LOADS_KVA = {2: 300, 3: 285, 4: 445, 5: 750, 6: 565, 7: 90, 8: 605, 9: 490,
             10: 340, 11: 207, 13: 40, 14: 390, 15: 300, 17: 300}
POWER_FACTOR = 0.95

COIL_Q = 10.0
GROUNDING_Z0 = complex(1.0, 6.0)
GROUNDED = [1, 12]

MONITORED = {2, 4, 6, 7, 8, 10, 11, 13, 14, 15, 16, 17}


def c(z):
    return [z.real, z.imag]


def mat(diag, off=0j):
    return [[c(diag if r == k else off) for k in range(3)] for r in range(3)]


def balanced(mag, angle_deg):
    a = math.radians(angle_deg)
    return [c(cmath.rect(mag, a - k * 2 * math.pi / 3)) for k in range(3)]


def main(path):
    zs = (Z0 + 2 * Z1) / 3
    zm = (Z0 - Z1) / 3
    branches = []
    c0_total = 0.0
    for i, (a, b, km) in enumerate(LINES, start=1):
        y_end = complex(0.0, W * C1 * km / 2)
        c0_total += C1 * km
        branches.append({"id": i, "from": a, "to": b, "impedance": mat(zs * km, zm * km),
                         "shunt": mat(y_end), "kind": "line"})
    for k, (a, b) in enumerate(TRANSFORMERS, start=len(LINES) + 1):
        branches.append({"id": k, "from": a, "to": b, "impedance": mat(Z_TRAFO),
                         "kind": "transformer"})

    # coils in parallel resonate with the total zero-sequence capacitance
    l_total = 1.0 / (3 * W * W * c0_total)
    l_coil = l_total * len(GROUNDED)
    nodes = []
    for n in range(1, 18):
        node = {"id": n, "name": f"N{n}", "monitored": n in MONITORED}
        if n in GROUNDED:
            node["grounding"] = {"kind": "petersen", "inductance": l_coil,
                                 "resistance": W * l_coil / COIL_Q, "z0": c(GROUNDING_Z0)}
        nodes.append(node)

    sources = [{"node": 16, "emf": balanced(1.03 * V_PH, 0.0),
                "impedance": mat(complex(0.04, 0.398)), "neutral": "isolated"}]
    for n, angle in ((5, 4.0), (10, 4.5), (13, 3.0)):
        sources.append({"node": n, "emf": balanced(1.055 * V_PH, angle),
                        "impedance": mat(complex(10.0, 150.0)), "neutral": "isolated"})

    loads = []
    for n, kva in sorted(LOADS_KVA.items()):
        s = kva * 1e3 * complex(POWER_FACTOR, math.sqrt(1 - POWER_FACTOR ** 2))
        zd = 3 * V_LL ** 2 / s.conjugate()
        loads.append({"node": n, "impedance": [[c(0j), c(zd), c(zd)],
                                               [c(zd), c(0j), c(zd)],
                                               [c(zd), c(zd), c(0j)]]})

    doc = {"FREQUENCY": F, "NOMINAL_VOLTAGE": V_PH, "NODES": nodes, "BRANCHES": branches,
           "SOURCES": sources, "LOADS": loads}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/benchmark17.json")
