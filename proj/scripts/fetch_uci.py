#!/usr/bin/env python3
"""Fetch and convert the UCI regression benchmark datasets.

The benchmark harness ingests comma-separated CSV with a mandatory header
row and the target as the last column. UCI distributes these datasets as
whitespace-separated text without headers; this script performs the
one-time conversion.

Canonical sources (https://archive.ics.uci.edu/ml/datasets/...):
  boston   Housing (also distributed via CMU StatLib)
  concrete Concrete Compressive Strength
  energy   Energy Efficiency (ENB2012, heating load target)
  kin8nm   kin family of datasets (8nm variant, from Delve)
  naval    Condition Based Maintenance of Naval Propulsion Plants
  power    Combined Cycle Power Plant
  protein  Physicochemical Properties of Protein Tertiary Structure
  wine     Wine Quality (red)
  yacht    Yacht Hydrodynamics

A convenient single mirror carrying the exact data.txt files used by the
standard UCI uncertainty benchmarks (Hernandez-Lobato & Adams splits):
  https://github.com/yaringal/DropoutUncertaintyExps
  (UCI_Datasets/<name>/data/data.txt)

Usage:
  python3 scripts/fetch_uci.py --src <dir-with-UCI_Datasets> --out data/uci
  python3 scripts/fetch_uci.py --download --out data/uci   # needs network

Only boston, energy, and yacht are required by the desk-scale acceptance
runs; those three converted CSVs are committed under data/uci/.
"""

import argparse
import io
import os
import sys
import tarfile
import urllib.request

MIRROR_TARBALL = (
    "https://github.com/yaringal/DropoutUncertaintyExps/archive/refs/heads/master.tar.gz"
)

# dataset key -> (mirror directory name, column names with target last)
DATASETS = {
    "boston": (
        "bostonHousing",
        ["crim", "zn", "indus", "chas", "nox", "rm", "age", "dis",
         "rad", "tax", "ptratio", "b", "lstat", "medv"],
    ),
    "concrete": (
        "concrete",
        ["cement", "blast_furnace_slag", "fly_ash", "water", "superplasticizer",
         "coarse_aggregate", "fine_aggregate", "age", "compressive_strength"],
    ),
    "energy": (
        "energy",
        ["relative_compactness", "surface_area", "wall_area", "roof_area",
         "overall_height", "orientation", "glazing_area",
         "glazing_area_distribution", "heating_load"],
    ),
    "kin8nm": (
        "kin8nm",
        [f"theta{i}" for i in range(1, 9)] + ["y"],
    ),
    "naval": (
        "naval-propulsion-plant",
        [f"f{i}" for i in range(1, 17)] + ["gt_turbine_decay"],
    ),
    "power": (
        "power-plant",
        ["temperature", "exhaust_vacuum", "ambient_pressure",
         "relative_humidity", "net_energy_output"],
    ),
    "protein": (
        "protein-tertiary-structure",
        [f"f{i}" for i in range(1, 10)] + ["rmsd"],
    ),
    "wine": (
        "wine-quality-red",
        ["fixed_acidity", "volatile_acidity", "citric_acid", "residual_sugar",
         "chlorides", "free_sulfur_dioxide", "total_sulfur_dioxide", "density",
         "ph", "sulphates", "alcohol", "quality"],
    ),
    "yacht": (
        "yacht",
        ["center_buoyancy", "prismatic_coeff", "length_displacement",
         "beam_draught", "length_beam", "froude_number", "resistance"],
    ),
}


def convert(raw_path: str, names: list[str], out_path: str) -> int:
    rows = []
    with open(raw_path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != len(names):
                raise SystemExit(
                    f"{raw_path}: expected {len(names)} columns, got {len(parts)}: {line!r}"
                )
            # validate numerics; keep the original text to avoid reformatting
            for p in parts:
                float(p)
            rows.append(",".join(parts))
    with open(out_path, "w") as fh:
        fh.write(",".join(names) + "\n")
        fh.write("\n".join(rows) + "\n")
    return len(rows)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--src", help="directory containing UCI_Datasets/<name>/data/data.txt")
    ap.add_argument("--download", action="store_true",
                    help="download the mirror tarball instead of using --src")
    ap.add_argument("--out", default="data/uci", help="output directory for CSVs")
    ap.add_argument("--only", nargs="*", default=sorted(DATASETS),
                    help="subset of dataset keys to convert")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    src = args.src
    if args.download:
        print(f"downloading {MIRROR_TARBALL} ...")
        data = urllib.request.urlopen(MIRROR_TARBALL).read()
        src = os.path.join(args.out, "_mirror")
        with tarfile.open(fileobj=io.BytesIO(data), mode="r:gz") as tf:
            tf.extractall(src)
        src = os.path.join(src, "DropoutUncertaintyExps-master")
    if not src:
        ap.error("need --src or --download")

    for key in args.only:
        mirror_name, names = DATASETS[key]
        raw = os.path.join(src, "UCI_Datasets", mirror_name, "data", "data.txt")
        out = os.path.join(args.out, f"{key}.csv")
        n = convert(raw, names, out)
        print(f"{key}: {n} rows, {len(names) - 1} features -> {out}")


if __name__ == "__main__":
    main()
