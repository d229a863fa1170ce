#!/usr/bin/env python3
"""Regenerate data/rubidium.json from the ARC atomic-data package.

Energies come from ARC's NIST-based level tables; reduced dipole matrix
elements <n'J'||D||nJ> (Edmonds convention, units e*a0) come from ARC's
literature table when available and from its Numerov/model-potential
integration otherwise.  Hyperfine structure is ignored.

    pip install ARC-Alkali-Rydberg-Calculator==3.10.2
    python3 scripts/gen_rb_catalog.py > data/rubidium.json
"""
import json

import arc
from arc import Rubidium87

EV_TO_CM = 8065.543937

atom = Rubidium87()
L_LETTER = "SPDF"


def label(n, l, j):
    return f"{n}{L_LETTER[l]}{int(2 * j)}/2"


levels = []
for n in range(5, 11):
    levels.append((n, 0, 0.5))
for n in range(5, 21):
    levels.append((n, 1, 0.5))
    levels.append((n, 1, 1.5))
for n in range(4, 10):
    levels.append((n, 2, 1.5))
    levels.append((n, 2, 2.5))

e0 = atom.getEnergy(5, 0, 0.5)
level_entries = []
for n, l, j in sorted(levels, key=lambda t: atom.getEnergy(*t)):
    level_entries.append(
        {
            "label": label(n, l, j),
            "n": n,
            "l": l,
            "twice_j": int(2 * j),
            "energy_cm": round((atom.getEnergy(n, l, j) - e0) * EV_TO_CM, 4),
        }
    )


def line(lower, upper):
    d = abs(atom.getReducedMatrixElementJ(*lower, *upper))
    found, _, ref = atom.getLiteratureDME(*lower, *upper)
    if found:
        source = f"{ref[3]}, {ref[2]}"
    else:
        source = f"ARC {arc.__version__} Numerov integration, model potential"
    return {
        "lower": label(*lower),
        "upper": label(*upper),
        "reduced_d_au": round(d, 6),
        "source": source,
    }


def higher(a, b):
    return atom.getEnergy(*a) > atom.getEnergy(*b)


pairs = []
for ns in range(5, 11):
    for npp in range(5, 21):
        for jp in (0.5, 1.5):
            pairs.append(((ns, 0, 0.5), (npp, 1, jp)))
for jp in (0.5, 1.5):
    for nd in range(4, 10):
        for jd in (1.5, 2.5):
            if abs(jd - jp) <= 1:
                pairs.append(((5, 1, jp), (nd, 2, jd)))

lines = []
for a, b in pairs:
    lower, upper = (a, b) if higher(b, a) else (b, a)
    lines.append(line(lower, upper))


def labels(n_range, l, js):
    return [label(n, l, j) for n in n_range for j in js]


inclusion = {
    "5S1/2": {
        "targets": labels(range(5, 9), 1, (0.5, 1.5)),
        "extension": labels([9], 1, (0.5, 1.5)),
    },
    "5P1/2": {
        "targets": labels(range(5, 9), 0, (0.5,)) + labels(range(4, 9), 2, (1.5,)),
        "extension": labels([9], 0, (0.5,)) + labels([9], 2, (1.5,)),
    },
    "5P3/2": {
        "targets": labels(range(5, 9), 0, (0.5,))
        + labels(range(4, 9), 2, (1.5, 2.5)),
        "extension": labels([9], 0, (0.5,)) + labels([9], 2, (1.5, 2.5)),
    },
}
for n in range(6, 11):
    inclusion[label(n, 0, 0.5)] = {
        "targets": labels(range(5, 21), 1, (0.5, 1.5)),
        "extension": [],
    }

catalog = {
    "schema": "atomic-catalog/1",
    "version": f"rb-1.0 (ARC {arc.__version__})",
    "element": "Rb",
    "mass_amu": 86.909180531,
    "ground": "5S1/2",
    "source": "Energies: NIST ASD via ARC; matrix elements: ARC literature table "
    "(Safronova et al.) with Numerov fallback",
    "levels": level_entries,
    "lines": lines,
    "inclusion": inclusion,
}
print(json.dumps(catalog, indent=2))
