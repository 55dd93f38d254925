#!/usr/bin/env python3
"""Regenerates the synthetic compliance-report fixture and its oracles.

Outputs (next to this script):
  synthetic_200.csv          200 inspection rows in the default column layout
  synthetic_200.tally.json   hand tally: counts by type, by year, top descriptions
  synthetic_200.wordcounts.tsv
                             token counts of the EHS comment corpus under
                             tokenization only (punctuation deleted, lowercased,
                             whitespace split)

Usage: python3 fixtures/generate.py
"""

import collections
import csv
import datetime
import json
import random
import string
from pathlib import Path

SEED = 20240601
ROWS = 200
HERE = Path(__file__).resolve().parent

EHS = "Environmental Health & Safety"
ADMIN = "Administrative"
NONE = "None"

CODES = [
    ("78.54", "Failure to properly control or dispose of industrial or residual waste to prevent pollution of the waters of the Commonwealth."),
    ("102.4", "Failure to minimize accelerated erosion, implement E&S plan, maintain E&S controls."),
    ("401 CSL", "Discharge of pollutional material to waters of Commonwealth."),
    ("78.73A", "Operator shall prevent gas and other fluids from lower formations from entering fresh groundwater."),
    ("78.56", "Failure to maintain pit freeboard and liner integrity."),
    ("SWMA 301", "Failure to properly store, transport, process or dispose of a residual waste."),
    ("78.86", "Failure to report defective, insufficient, or improperly cemented casing."),
]
ADMIN_CODES = [
    ("201H", "Failure to properly install the permit number, issued by the department, on a completed well."),
    ("212", "Failure to submit well record within 30 days of completion of drilling."),
    ("78.122", "Well record or completion report not submitted."),
]

# Each theme is a pool of sentences; one comment draws 2-3 from one theme
# and sometimes one from a second theme.
THEMES = {
    "combustion": [
        "Methane combustion unit not operating; methane observed at the flare.",
        "Inspector noted the combustor failed to combust methane from the separator.",
        "Methane readings elevated near the enclosed combustor; operator to combust methane fully.",
        "Combust methane at the flare stack per permit conditions.",
        "Unburned methane detected; combustion device offline and unable to combust methane.",
        "Methane leaking past the combustor seal; combustion efficiency poor.",
    ],
    "venting": [
        "Gas venting from the well head cellar during inspection.",
        "Well vent line discharging gas to atmosphere.",
        "Gas bubbling in the well cellar; vent valve left open.",
        "Operator vented gas from the well without approval.",
        "Gas odor at the well; vent stack unsecured.",
    ],
    "spill": [
        "Brine spill on the well pad; puddles of brine on the ground.",
        "Flowback spill observed on the pad surface near the ground liner.",
        "Spilled flowback pooled in a puddle at the pad edge.",
        "Brine spilled onto the ground beside the pad containment.",
        "Puddle of flowback fluid on the pad; spill not reported.",
        "Spill of brine reached the ground outside the pad berm.",
    ],
    "erosion": [
        "Accelerated erosion along the access road; sediment leaving the site.",
        "Silt and sediment in the road drainage ditch due to erosion.",
        "Erosion controls failing; drainage carrying silt off the road.",
        "Sediment laden drainage observed; silt fence down along the road.",
        "Road drain clogged with sediment; erosion of the road shoulder.",
        "Drainage swale eroded; silt reaching the stream via the drain.",
    ],
    "leak": [
        "Oil leak at the production tank valve.",
        "Diesel fuel leaking from the truck onto the ground.",
        "Tank leaking oil into secondary containment.",
        "Fuel barrel leaking diesel near the tank battery.",
        "Truck leaked fuel while unloading; oil staining around barrel storage.",
        "Leaking diesel barrel stored without containment beside the tank.",
    ],
    "pit": [
        "Drilling mud overflowing the pit; freeboard inadequate.",
        "Drill cuttings and mud disposed in the unlined pit.",
        "Waste disposal in the impound not permitted; drill mud present.",
        "Sump full of drilling mud; waste on the mat.",
        "Improper disposal of drill waste in the impound.",
        "Mud from drilling spilled off the rig mat into the sump.",
    ],
    "casing": [
        "Casing cement inadequate; gas migration at the well.",
        "Operator failed to cement the surface casing to depth.",
        "Excavated area around the casing shows gas bubbling.",
        "Frack blender staged on the pad; casing pressure elevated during the frack.",
        "Excavate and repair the casing; cement returns not observed.",
        "Blender leaking during the frack; casing annulus open.",
    ],
}
THEME_WEIGHTS = {
    "combustion": 3,
    "venting": 2,
    "spill": 3,
    "erosion": 3,
    "leak": 3,
    "pit": 3,
    "casing": 3,
}
NONE_COMMENTS = [
    "Routine inspection; no violations noted.",
    "Site restored; vegetation established.",
    "Inspection during drilling; site in compliance.",
    "Well producing; no issues observed.",
    "",
]
ADMIN_COMMENTS = [
    "Permit number sign missing at the site entrance.",
    "Well record not received by the department.",
    "",
]


def comment(rng):
    themes = list(THEMES)
    weights = [THEME_WEIGHTS[t] for t in themes]
    main = rng.choices(themes, weights)[0]
    sentences = rng.sample(THEMES[main], rng.randint(2, 3))
    if rng.random() < 0.3:
        other = rng.choice([t for t in themes if t != main])
        sentences.append(rng.choice(THEMES[other]))
    return " ".join(sentences)


def date(rng):
    if rng.random() < 0.02:
        return ""
    start = datetime.date(2010, 1, 1).toordinal()
    end = datetime.date(2018, 12, 31).toordinal()
    return datetime.date.fromordinal(rng.randint(start, end)).isoformat()


def rows(rng):
    out = []
    for i in range(ROWS):
        u = rng.random()
        if u < 0.60:
            ty = EHS
            code, desc = rng.choice(CODES)
            text = "" if rng.random() < 0.08 else comment(rng)
        elif u < 0.75:
            ty = ADMIN
            code, desc = rng.choice(ADMIN_CODES)
            text = rng.choice(ADMIN_COMMENTS)
        else:
            ty = NONE
            code, desc = "", ""
            text = rng.choice(NONE_COMMENTS)
        out.append({
            "record_id": f"INSP-{100000 + i}",
            "inspection_date": date(rng),
            "violation_type": ty,
            "violation_code": code,
            "violation_description": desc,
            "inspection_comment": text,
        })
    return out


def tally(records, top_n=5):
    by_type = collections.Counter(r["violation_type"] for r in records)
    violations = [r for r in records if r["violation_type"] != NONE]
    by_year = collections.Counter(
        int(r["inspection_date"][:4]) for r in violations if r["inspection_date"]
    )
    desc = collections.Counter(
        r["violation_description"].strip() for r in violations if r["violation_description"].strip()
    )
    top = sorted(desc.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    return {
        "total_records": len(records),
        "selected_records": sum(1 for r in violations if r["inspection_comment"].strip()),
        "count_by_type": {t: by_type.get(t, 0) for t in (NONE, ADMIN, EHS)},
        "count_by_year": {str(y): c for y, c in sorted(by_year.items())},
        "top_codes": [{"description": d, "count": c} for d, c in top],
    }


def word_counts(records):
    strip = str.maketrans("", "", string.punctuation)
    counts = collections.Counter()
    for r in records:
        if r["violation_type"] == EHS and r["inspection_comment"].strip():
            counts.update(r["inspection_comment"].translate(strip).lower().split())
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def main():
    rng = random.Random(SEED)
    records = rows(rng)
    fields = list(records[0])
    with open(HERE / "synthetic_200.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(records)
    with open(HERE / "synthetic_200.tally.json", "w", encoding="utf-8") as f:
        json.dump(tally(records), f, indent=2)
        f.write("\n")
    with open(HERE / "synthetic_200.wordcounts.tsv", "w", encoding="utf-8") as f:
        f.write("token\tcount\n")
        for t, c in word_counts(records):
            f.write(f"{t}\t{c}\n")


if __name__ == "__main__":
    main()
