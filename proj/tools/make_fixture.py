"""Writes the synthetic 12-country fixture and its independently computed expectations.

Usage: python tools/make_fixture.py [OUTDIR]   (default data/fixture)

Expected values are computed here with exact rationals (RCA, M, PGI, expected
Gini) and numpy (ECI, regressions), never by the C++ code under test.
"""

import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

SEED = 20240611
COUNTRIES = ["ARG", "AUS", "BRA", "CHL", "DEU", "ESP", "IND", "JPN", "KOR", "MEX", "NOR", "USA"]
SMALL = "ISL"  # population below the frame filter
PRODUCTS = [
    "0011", "0111", "0411", "0575", "2222", "2631", "2815", "3330",  # commodities
    "5121", "5530", "6251", "6513", "6782", "7112", "7149", "7169",  # manufactures
    "7239", "7524", "7764", "8710",
]
N_COMMODITY = 8
PERIODS = [("1996-2001", 1996, 2001), ("2002-2008", 2002, 2008)]
GOVERNANCE = ["rule_of_law", "corruption_control", "government_effectiveness",
              "political_stability", "regulatory_quality", "voice_accountability"]
NO_GINI_LATE = "IND"  # no inequality data in the second period


def yearly_exports(rng):
    """value[year][country][product] as integer USD."""
    capability = {c: 1 + i for i, c in enumerate(COUNTRIES)}
    capability[SMALL] = 4
    out = {}
    for _, start, end in PERIODS:
        for year in range(start, end + 1):
            drift = 0 if year < 2002 else 1
            table = {}
            for c in COUNTRIES + [SMALL]:
                row = {}
                level = capability[c] + (drift if c in ("KOR", "MEX", "IND") else 0)
                for j, p in enumerate(PRODUCTS):
                    if j < N_COMMODITY:
                        if (j + capability[c]) % 3 == 0 or level <= 3:
                            base = 4.0e8 * (1 + (j % 4))
                        else:
                            base = 3.0e7
                    else:
                        rank = j - N_COMMODITY + 1  # 1..12
                        base = 3.5e8 * (1 + 0.1 * rank) if rank <= level else 1.0e7 * rank
                    scale = 0.3 if c == SMALL else 1.0
                    row[p] = int(round(base * scale * float(rng.uniform(0.7, 1.3))))
                table[c] = row
            out[year] = table
    return out


def period_means(values, start, end):
    years = end - start + 1
    countries = COUNTRIES + [SMALL]
    return {c: {p: Fraction(sum(values[y][c][p] for y in range(start, end + 1)), years)
                for p in PRODUCTS} for c in countries}


def rca_exact(x):
    countries = sorted(x)
    row = {c: sum(x[c].values()) for c in countries}
    col = {p: sum(x[c][p] for c in countries) for p in PRODUCTS}
    total = sum(row.values())
    return {c: {p: (x[c][p] / row[c]) / (col[p] / total) for p in PRODUCTS} for c in countries}


def eci_numpy(m):
    """ECI by the general (non-symmetric) eigenproblem of M~ = D^-1 M U^-1 M^T."""
    d = m.sum(axis=1)
    u = m.sum(axis=0)
    mt = (m / d[:, None]) @ (m / u[None, :]).T
    w, v = np.linalg.eig(mt)
    order = np.argsort(-w.real)
    lam2 = w.real[order[1]]
    gap = min(abs(w.real[order[0]] - lam2), abs(lam2 - w.real[order[2]]))
    k = v[:, order[1]].real
    eci = (k - k.mean()) / k.std()
    if np.corrcoef(eci, d)[0, 1] < 0:
        eci = -eci
    return eci, lam2, gap


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "fixture"
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    values = yearly_exports(rng)

    with open(outdir / "trade.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["year", "origin", "sitc4", "value_usd"])
        for year in sorted(values):
            for c in sorted(values[year]):
                for p in PRODUCTS:
                    w.writerow([year, c, p, values[year][c][p]])
        w.writerow([2003, "ARG", "0011", -5])  # rejected row

    expected = {"periods": {}}
    panel_rows = []
    ehii_rows, wdi_rows, wgi_rows = [], [], []
    latent = {c: float(rng.normal()) for c in COUNTRIES}
    for pid, start, end in PERIODS:
        x = period_means(values, start, end)
        retained = {c: x[c] for c in COUNTRIES}
        rca = rca_exact(retained)
        m = np.array([[1.0 if rca[c][p] >= 1 else 0.0 for p in PRODUCTS] for c in COUNTRIES])
        assert (m.sum(axis=0) > 0).all() and (m.sum(axis=1) > 0).all()
        eci, lam2, gap = eci_numpy(m)
        assert gap > 1e-6, "fixture ECI eigenvalue is degenerate"

        gini = {}
        for i, c in enumerate(COUNTRIES):
            gini[c] = round(0.42 - 0.05 * eci[i] + 0.012 * latent[c] + float(rng.normal(0, 0.01)), 4)
        gdp = {c: round(math.exp(9.3 + 0.15 * eci[i] + float(rng.normal(0, 0.45))), 1)
               for i, c in enumerate(COUNTRIES)}

        covered = {c: Fraction(gini[c]).limit_denominator(10**6) for c in COUNTRIES
                   if not (pid == "2002-2008" and c == NO_GINI_LATE)}
        share = {c: {p: retained[c][p] / sum(retained[c].values()) for p in PRODUCTS} for c in COUNTRIES}
        pgi = {}
        for j, p in enumerate(PRODUCTS):
            num = sum((share[c][p] * covered[c] for i, c in enumerate(COUNTRIES) if m[i, j] and c in covered),
                      Fraction(0))
            den = sum((share[c][p] for i, c in enumerate(COUNTRIES) if m[i, j] and c in covered), Fraction(0))
            if den > 0:
                pgi[p] = num / den
        eg = {}
        for i, c in enumerate(COUNTRIES):
            num = sum((share[c][p] * pgi[p] for j, p in enumerate(PRODUCTS) if m[i, j] and p in pgi), Fraction(0))
            den = sum((share[c][p] for j, p in enumerate(PRODUCTS) if m[i, j] and p in pgi), Fraction(0))
            eg[c] = float(num / den) if den > 0 else None

        expected["periods"][pid] = {
            "countries": COUNTRIES,
            "products": PRODUCTS,
            "filtered": [SMALL],
            "rca": [[float(rca[c][p]) for p in PRODUCTS] for c in COUNTRIES],
            "m": m.astype(int).tolist(),
            "diversity": m.sum(axis=1).astype(int).tolist(),
            "ubiquity": m.sum(axis=0).astype(int).tolist(),
            "eci": eci.tolist(),
            "lambda2": float(lam2),
            "pgi": {p: float(v) for p, v in sorted(pgi.items())},
            "expected_gini": eg,
        }

        for c in COUNTRIES + [SMALL]:
            pop_base = 3.0e5 if c == SMALL else 5.0e6 * (1 + COUNTRIES.index(c))
            g = gini.get(c, 0.33)
            for k, year in enumerate(range(start, end + 1)):
                # Gini on a 0-100 scale for the first four years; the values average to the target.
                if not (c == NO_GINI_LATE and pid == "2002-2008") and k < 4:
                    ehii_rows.append([c, year, f"{100 * g + (0.5 if k % 2 == 0 else -0.5):.2f}"])
                gdp_c = gdp.get(c, 30000.0)
                wdi_rows.append([c, year, f"{gdp_c:.1f}", f"{6 + COUNTRIES.index(c) % 5 if c != SMALL else 9}",
                                 f"{pop_base * (1 + 0.01 * k):.0f}"])
                if c != SMALL:
                    gov = [round(float(np.clip(0.3 * eci[COUNTRIES.index(c)] + rng.normal(0, 0.5), -2.5, 2.5)), 3)
                           for _ in GOVERNANCE]
                    wgi_rows.append([c, year] + gov)

        for i, c in enumerate(COUNTRIES):
            panel_rows.append((c, pid, eci[i], gini[c] if c in covered else None, gdp[c]))

    def write(name, header, rows):
        with open(outdir / name, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    write("ehii.csv", ["country", "year", "gini"], ehii_rows)
    write("wdi.csv", ["country", "year", "gdp_ppp_pc", "schooling", "population"], wdi_rows)
    write("wgi.csv", ["country", "year"] + GOVERNANCE, wgi_rows)

    # Pooled regressions on the period-mean panel, computed with numpy least squares.
    obs = [r for r in panel_rows if r[3] is not None]
    y = np.array([r[3] for r in obs])
    def r2(xcol):
        x = np.column_stack([np.ones(len(obs)), xcol])
        beta, *_ = np.linalg.lstsq(x, y, rcond=None)
        res = y - x @ beta
        return 1 - res @ res / ((y - y.mean()) @ (y - y.mean()))

    expected["regression"] = {
        "n": len(obs),
        "r2_eci": float(r2(np.array([r[2] for r in obs]))),
        "r2_ln_gdp": float(r2(np.log(np.array([r[4] for r in obs])))),
    }

    config = {
        "trade": "trade.csv",
        "panels": ["ehii.csv", "wdi.csv", "wgi.csv"],
        "periods": [{"id": pid, "start": s, "end": e} for pid, s, e in PERIODS],
        "gini_dataset": "ehii",
        "output": "snapshot",
    }
    (outdir / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    (outdir / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main()
