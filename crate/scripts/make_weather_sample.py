#!/usr/bin/env python3
"""Writes data/weather_sample.csv: synthetic daily minimum and maximum
temperatures with a seasonal cycle. Output is fully determined by SEED."""
import datetime
import math
import pathlib
import random

SEED = 7
DAYS = 180


def main():
    rng = random.Random(SEED)
    start = datetime.date(2023, 1, 1)
    rows = ["date,min_temp,max_temp"]
    for i in range(DAYS):
        season = -8.0 * math.cos(2 * math.pi * i / 365.0)
        min_temp = season - 4.0 + rng.gauss(0.0, 3.0)
        max_temp = 0.9 * min_temp + 8.0 + rng.gauss(0.0, 2.0)
        day = start + datetime.timedelta(days=i)
        rows.append(f"{day.isoformat()},{min_temp:.1f},{max_temp:.1f}")
    path = pathlib.Path(__file__).resolve().parent.parent / "data" / "weather_sample.csv"
    path.parent.mkdir(exist_ok=True)
    path.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
