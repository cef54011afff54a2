"""Builds firm_years_50.csv and derives the frozen expectations with pandas.

Run from this directory: python3 oracle.py
"""
import json
import random

import numpy as np
import pandas as pd

GRANULAR = ["AAA", "AA+", "AA", "AA-", "A+", "A", "A-", "BBB+", "BBB", "BBB-",
            "BB+", "BB", "BB-", "B+", "B", "B-", "CCC+", "CCC", "CCC-", "CC", "SD", "D"]
BROAD = ["AAA", "AA", "A", "BBB", "BB", "B", "CCC", "CC", "SD", "D"]
SCALED = ["che", "rect", "invt", "act", "ppent", "intan", "ao", "cogs", "xsga", "dp",
          "capx", "xrd", "txt", "ib", "oancf", "ivncf", "aqc", "dv"]
CATS = ["auditor", "auop", "acctchg", "ceoso", "cfoso", "exchg", "fic", "stko"]
MONEY = ["sale", "at", "dltt", "dlc", "seq", "ceq", "prcc_f", "csho", "ebitda", "xint"]
COLUMNS = ["gvkey", "fyear", "sic", "splticrm"] + CATS + MONEY + SCALED


def build():
    rnd = random.Random(20240611)
    sics = ["2834", "3571", "4911", "5812", "2011", "3674", "4512", "7372", "1311", "2911"]
    rows = []
    for i in range(50):
        at = round(rnd.uniform(50, 5000), 3)
        sale = round(at * rnd.uniform(0.3, 1.5), 3)
        dltt = round(at * rnd.uniform(0.0, 0.4), 3)
        dlc = round(at * rnd.uniform(0.0, 0.1), 3)
        ceq = round(at * rnd.uniform(0.2, 0.6), 3)
        row = {
            "gvkey": f"{1000 + i:06d}",
            "fyear": str(2000 + i % 15),
            "sic": rnd.choice(sics),
            "splticrm": rnd.choice(GRANULAR + ["", "", "", "NR"]),
            "sale": sale, "at": at, "dltt": dltt, "dlc": dlc,
            "seq": ceq, "ceq": ceq,
            "prcc_f": round(rnd.uniform(2, 120), 2),
            "csho": round(rnd.uniform(5, 400), 3),
            "ebitda": round(sale * rnd.uniform(0.05, 0.3), 3),
            "xint": round(dltt * rnd.uniform(0.02, 0.08), 4),
        }
        for c in CATS:
            row[c] = rnd.choice(["1", "2", "3", ""])
        for s in SCALED:
            row[s] = round(at * rnd.uniform(0.0, 0.3), 3) if rnd.random() > 0.1 else ""
        rows.append(row)
    # rows engineered to fail exactly one rule each
    rows[3]["sic"] = "6020"
    rows[11]["sic"] = "6798"
    rows[17]["sic"] = "9995"
    rows[22]["sale"] = 0.4
    rows[29]["seq"] = -12.5
    rows[34]["dltt"] = -1.0
    rows[41]["at"] = ""
    rows[46]["at"] = 0.8
    # survivors with awkward cells
    rows[5]["seq"] = ""
    rows[8]["dlc"] = ""
    rows[13]["splticrm"] = "bbb-"
    rows[27]["sic"] = ""
    rows[38]["sale"] = 1.0
    return pd.DataFrame(rows, columns=COLUMNS)


def num(df, c):
    return pd.to_numeric(df[c].replace("", np.nan), errors="coerce")


def survivors(df):
    sic = df["sic"].astype(str)
    keep = ~(sic.str.startswith("6") | sic.str.startswith("9"))
    keep &= num(df, "sale").fillna(-np.inf) >= 1.0
    keep &= num(df, "at").fillna(-np.inf) >= 1.0
    keep &= ~(num(df, "seq") < 0)
    lt, st = num(df, "dltt"), num(df, "dlc")
    keep &= ~((lt < 0) | (st < 0) | ((lt.fillna(0) + st.fillna(0)) < 0))
    return df[keep].reset_index(drop=True)


def rating_of(token):
    t = str(token).strip().upper()
    if t in ("", "NR", "NONE", "NAN"):
        return None
    return GRANULAR.index(t)


def group_of(r, level):
    if r is None:
        return None
    if level == "any":
        return "rated"
    if level == "invspec":
        return "investment" if r <= GRANULAR.index("BBB-") else "speculative"
    if level == "broad":
        t = GRANULAR[r]
        base = t.rstrip("+-")
        return base if base in BROAD else t
    return GRANULAR[r]


def stats(values, total):
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        return {"q1": None, "median": None, "mean": None, "q3": None, "count": 0, "share": 0.0}
    return {
        "q1": float(np.percentile(v, 25)),
        "median": float(np.percentile(v, 50)),
        "mean": float(v.mean()),
        "q3": float(np.percentile(v, 75)),
        "count": int(len(v)),
        "share": len(v) / total,
    }


def summaries(df):
    lda = (num(df, "dltt").fillna(0) + num(df, "dlc").fillna(0)) / num(df, "at")
    ratings = [rating_of(t) for t in df["splticrm"]]
    n = len(df)
    out = {}
    labels = {
        "any": ["rated"],
        "invspec": ["investment", "speculative"],
        "broad": BROAD,
        "granular": GRANULAR,
    }
    for level, groups in labels.items():
        rows = []
        for g in groups:
            vals = [lda[i] for i in range(n) if group_of(ratings[i], level) == g]
            rows.append({"group": g, **stats(vals, n)})
        rated = [lda[i] for i in range(n) if ratings[i] is not None]
        unrated = [lda[i] for i in range(n) if ratings[i] is None]
        rows.append({"group": "Total ratings", **stats(rated, n)})
        rows.append({"group": "No rating", **stats(unrated, n)})
        rows.append({"group": "Grand total", **stats(list(lda), n)})
        out[level] = rows
    return out


def main():
    df = build()
    df.to_csv("firm_years_50.csv", index=False)
    raw = pd.read_csv("firm_years_50.csv", dtype=str, keep_default_na=False)
    kept = survivors(raw)
    expected = {
        "input_rows": len(raw),
        "surviving_rows": len(kept),
        "surviving_gvkeys": list(kept["gvkey"]),
        "lda_summary": summaries(kept),
    }
    with open("firm_years_50.expected.json", "w") as f:
        json.dump(expected, f, indent=1)


if __name__ == "__main__":
    main()
