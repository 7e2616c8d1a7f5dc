#!/usr/bin/env python3
"""Writes a heart-disease-shaped surrogate CSV (Kaggle column order).

Rows are drawn class-conditionally so that the target depends on chest-pain
type, max heart rate, ST depression, vessel count, exercise angina, sex and
thal, roughly as in the public dataset. All values stay inside the built-in
schema ranges.
"""
import argparse

import numpy as np

COLUMNS = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
           "exang", "oldpeak", "slope", "ca", "thal", "target"]


def categorical(rng, n, probs):
    return rng.choice(len(probs), size=n, p=np.asarray(probs) / np.sum(probs))


def draw(rng, n, y):
    sick = y == 1
    age = np.where(sick, rng.normal(52.5, 9.5, n), rng.normal(56.6, 7.9, n))
    sex = np.where(sick, rng.random(n) < 0.56, rng.random(n) < 0.83).astype(int)
    cp = np.where(sick, categorical(rng, n, [0.23, 0.26, 0.42, 0.09]), categorical(rng, n, [0.75, 0.09, 0.13, 0.03]))
    trestbps = np.where(sick, rng.normal(129, 16, n), rng.normal(134, 18.5, n))
    chol = np.where(sick, rng.normal(241, 45, n), rng.normal(251, 46, n))
    fbs = (rng.random(n) < np.where(sick, 0.13, 0.16)).astype(int)
    restecg = np.where(sick, categorical(rng, n, [0.41, 0.58, 0.01]), categorical(rng, n, [0.57, 0.41, 0.02]))
    thalach = np.where(sick, rng.normal(158, 18, n), rng.normal(139, 22, n))
    exang = (rng.random(n) < np.where(sick, 0.14, 0.55)).astype(int)
    oldpeak = np.where(sick, rng.gamma(1.1, 0.5, n), rng.gamma(2.2, 0.72, n))
    slope = np.where(sick, categorical(rng, n, [0.06, 0.27, 0.67]), categorical(rng, n, [0.09, 0.65, 0.26]))
    ca = np.where(sick, categorical(rng, n, [0.78, 0.13, 0.05, 0.02, 0.02]),
                  categorical(rng, n, [0.33, 0.32, 0.2, 0.14, 0.01]))
    thal = np.where(sick, categorical(rng, n, [0.01, 0.05, 0.79, 0.15]), categorical(rng, n, [0.01, 0.12, 0.25, 0.62]))

    def clip(v, lo, hi, decimals=0):
        return np.clip(np.round(v, decimals), lo, hi)

    return np.column_stack([
        clip(age, 32, 76), sex, cp, clip(trestbps, 98, 200), clip(chol, 126, 409), fbs, restecg,
        clip(thalach, 81, 199), exang, clip(oldpeak, 0, 4.4, 1), slope, ca, thal, y,
    ])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--out", default="data/heart_surrogate.csv")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    y = (rng.random(args.rows) < 0.51).astype(int)
    rows = draw(rng, args.rows, y)
    with open(args.out, "w") as f:
        f.write(",".join(COLUMNS) + "\n")
        for r in rows:
            f.write(",".join(f"{v:g}" for v in r) + "\n")


if __name__ == "__main__":
    main()
