"""Clinical scores (MAP, CART, simplified MEWS) and a synthetic triage-vitals generator.

Score tables use half-open ``[low, high)`` bands. The CART diastolic table
prints overlapping bands (``>= 49`` next to ``[40, 50)``, and ``<= 35`` next
to ``[35, 40)``); on an overlap the more severe band wins, so DBP 49 scores
4 and DBP 35 scores 13.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, write_csv
from .errors import InputError

VITALS = ("sbp", "dbp", "hr", "rr", "temp", "age")
RANGES = {"sbp": (60, 220), "dbp": (30, 130), "hr": (30, 180), "rr": (6, 40),
          "temp": (33, 41), "age": (18, 100)}
THRESHOLDS = {"CART": 12, "MEWS": 3}

# (upper bound, strict?, points) checked in order; the last band catches the rest.
CART_BANDS = {
    "rr": [(21, True, 0), (24, True, 8), (26, True, 12), (29, True, 15), (np.inf, False, 22)],
    "hr": [(110, True, 0), (140, True, 4), (np.inf, False, 13)],
    "dbp": [(35, False, 13), (40, True, 6), (50, True, 4), (np.inf, False, 0)],
    "age": [(55, True, 0), (70, True, 4), (np.inf, False, 9)],
}
MEWS_BANDS = {
    "sbp": [(71, True, 3), (81, True, 2), (101, True, 1), (200, True, 0), (np.inf, False, 2)],
    "hr": [(41, True, 2), (51, True, 1), (101, True, 0), (111, True, 1), (130, True, 2),
           (np.inf, False, 3)],
    "rr": [(9, True, 2), (15, True, 0), (21, True, 1), (30, True, 2), (np.inf, False, 3)],
    "temp": [(35, True, 2), (38.5, True, 0), (np.inf, False, 2)],
}


def band_points(value, bands) -> np.ndarray:
    """Points for each value under an ordered band list."""
    v = np.asarray(value, dtype=float)
    out = np.full(v.shape, bands[-1][2], dtype=int)
    done = np.zeros(v.shape, dtype=bool)
    for upper, strict, pts in bands:
        hit = ~done & ((v < upper) if strict else (v <= upper))
        out[hit] = pts
        done |= hit
    return out


def map_score(sbp, dbp):
    """Mean arterial pressure, ``(sbp + 2 dbp) / 3``."""
    return (np.asarray(sbp, dtype=float) + 2.0 * np.asarray(dbp, dtype=float)) / 3.0


def cart_score(resp_rate, heart_rate, dbp, age):
    """Cardiac Arrest Risk Triage score, 0 to 57."""
    total = (band_points(resp_rate, CART_BANDS["rr"]) + band_points(heart_rate, CART_BANDS["hr"])
             + band_points(dbp, CART_BANDS["dbp"]) + band_points(age, CART_BANDS["age"]))
    return int(total) if total.ndim == 0 else total


def mews_score(sbp, heart_rate, resp_rate, temperature):
    """Simplified MEWS without the AVPU component, 0 to 11."""
    total = (band_points(sbp, MEWS_BANDS["sbp"]) + band_points(heart_rate, MEWS_BANDS["hr"])
             + band_points(resp_rate, MEWS_BANDS["rr"]) + band_points(temperature, MEWS_BANDS["temp"]))
    return int(total) if total.ndim == 0 else total


def deterioration_label(score, system: str):
    """1 when ``score`` reaches the high-risk threshold of ``system``."""
    try:
        threshold = THRESHOLDS[system.upper()]
    except KeyError:
        raise InputError(f"no deterioration threshold for {system!r}") from None
    lab = (np.asarray(score) >= threshold).astype(int)
    return int(lab) if lab.ndim == 0 else lab


def system_score(system: str, cols: dict[str, np.ndarray]):
    system = system.upper()
    if system == "MAP":
        return map_score(cols["sbp"], cols["dbp"])
    if system == "CART":
        return cart_score(cols["rr"], cols["hr"], cols["dbp"], cols["age"])
    if system == "MEWS":
        return mews_score(cols["sbp"], cols["hr"], cols["rr"], cols["temp"])
    raise InputError(f"unknown scoring system {system!r}")


def sample_vitals(n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Triage vitals inside the plausible ranges, with ``dbp < sbp``.

    Rates and pressures are whole numbers and temperature has one decimal,
    as they are usually charted.
    """
    out: dict[str, list] = {k: [] for k in VITALS}
    have = 0
    while have < n:
        m = 2 * (n - have) + 16
        draw = {
            "sbp": np.round(rng.normal(128, 28, m)),
            "dbp": np.round(rng.normal(74, 16, m)),
            "hr": np.round(rng.normal(92, 24, m)),
            "rr": np.round(rng.normal(19, 4.5, m)),
            "temp": np.round(rng.normal(37.0, 0.9, m), 1),
            "age": np.round(rng.uniform(18, 100, m)),
        }
        ok = draw["dbp"] < draw["sbp"]
        for k, (lo, hi) in RANGES.items():
            ok &= (draw[k] >= lo) & (draw[k] <= hi)
        take = np.flatnonzero(ok)[: n - have]
        for k in VITALS:
            out[k].append(draw[k][take])
        have += take.size
    return {k: np.concatenate(v) for k, v in out.items()}


@dataclass
class ClinicalTable:
    """Generated rows: vitals, ``noise_*`` distractors, the score, and (CART/MEWS) ``label``."""

    system: str
    columns: dict[str, np.ndarray]

    @property
    def feature_names(self) -> list[str]:
        return [c for c in self.columns if c not in (self.system, "label")]

    def dataset(self, task: str = "regression") -> Dataset:
        names = self.feature_names
        X = np.column_stack([self.columns[c] for c in names])
        if task == "classification":
            if "label" not in self.columns:
                raise InputError(f"{self.system} has no deterioration label")
            y = self.columns["label"]
        else:
            y = self.columns[self.system]
        return Dataset(X, y.astype(float), names, task, meta={"system": self.system})

    def write_csv(self, path) -> None:
        write_csv(path, self.columns)


def generate_dataset(system: str, n: int = 10_000, distractors: int = 5,
                     prevalence: float | None = None, seed: int = 0,
                     max_draws: int | None = None) -> ClinicalTable:
    """Synthetic triage data labelled by ``system`` (``MAP``, ``CART`` or ``MEWS``).

    For CART and MEWS, rows are rejection-sampled until exactly
    ``round(prevalence * n)`` of them are high risk.
    """
    system = system.upper()
    if system not in ("MAP", "CART", "MEWS"):
        raise InputError(f"unknown scoring system {system!r}")
    if n < 100:
        raise InputError("n must be >= 100")
    rng = np.random.default_rng(seed)
    if system == "MAP":
        cols = sample_vitals(n, rng)
    else:
        if prevalence is None:
            prevalence = {"CART": 0.09, "MEWS": 0.11}[system]
        if not 0.0 < prevalence < 0.5:
            raise InputError("prevalence must lie in (0, 0.5)")
        n_pos = int(round(prevalence * n))
        n_neg = n - n_pos
        budget = max_draws if max_draws is not None else 200 * n
        pos: list[dict] = []
        neg: list[dict] = []
        got_pos = got_neg = drawn = 0
        while got_pos < n_pos or got_neg < n_neg:
            if drawn >= budget:
                raise InputError(f"prevalence {prevalence} unreachable within {budget} draws")
            batch = sample_vitals(n, rng)
            drawn += n
            lab = deterioration_label(system_score(system, batch), system)
            ip = np.flatnonzero(lab == 1)[: n_pos - got_pos]
            ineg = np.flatnonzero(lab == 0)[: n_neg - got_neg]
            pos.append({k: v[ip] for k, v in batch.items()})
            neg.append({k: v[ineg] for k, v in batch.items()})
            got_pos += ip.size
            got_neg += ineg.size
        order = rng.permutation(n)
        cols = {k: np.concatenate([b[k] for b in pos + neg])[order] for k in VITALS}
    for j in range(distractors):
        cols[f"noise_{j + 1}"] = np.round(rng.uniform(0.0, 1.0, n), 6)
    score = system_score(system, cols)
    cols[system] = score
    if system != "MAP":
        cols["label"] = deterioration_label(score, system)
    return ClinicalTable(system, cols)
