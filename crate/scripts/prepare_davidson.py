#!/usr/bin/env python3
"""Converts the public hate-speech tweet dataset (Davidson et al., 2017,
`labeled_data.csv`) into a two-column CSV usable by `eerm fit-tree --corpus-csv`.

Label 1 marks tweets annotated as hate speech or offensive (class 0 or 1),
label 0 marks neither (class 2). The dataset itself is not bundled.

usage: prepare_davidson.py labeled_data.csv out.csv
"""
import csv
import sys


def main(src, dst):
    with open(src, newline="", encoding="utf-8") as f_in, open(dst, "w", newline="", encoding="utf-8") as f_out:
        reader = csv.DictReader(f_in)
        missing = {"tweet", "class"} - set(reader.fieldnames or [])
        if missing:
            sys.exit(f"{src}: missing columns {sorted(missing)}")
        writer = csv.writer(f_out)
        writer.writerow(["text", "label"])
        rows = 0
        for row in reader:
            text = " ".join(row["tweet"].split())
            label = 1 if int(row["class"]) in (0, 1) else 0
            writer.writerow([text, label])
            rows += 1
    print(f"wrote {rows} rows to {dst}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
