"""End-to-end run of the bias analysis on generated treebanks.

Four synthetic languages with different word-order profiles stand in for UD
treebanks. The script writes them to a work directory, runs every CLI stage
against a manifest, and prints the bin 10-12 correlation between each
parser's relative accuracy and the distance between its inherent and the
observed displacement distributions.

    python demos/desk_pipeline.py [workdir]

Expect about two minutes single-threaded; set PARSEBIAS_JOBS to parallelise.
"""
import csv
import json
import sys
from pathlib import Path

from parsebias.cli import main
from parsebias.synthetic import PROFILES, generate_treebank, write_treebank

work = Path(sys.argv[1] if len(sys.argv) > 1 else "desk_run")
banks = work / "banks"
for k, prof in enumerate(PROFILES):
    write_treebank(generate_treebank(prof, prof, n_train=1000, n_test=300, seed=k), banks)

manifest = work / "manifest.json"
manifest.write_text(json.dumps({"treebank_root": "banks", "min_test": 300, "out_dir": "out", "seed": 7}, indent=2))

for cmd in (["stats"], ["train-eval"], ["inherent"], ["displacement-report"],
            ["correlate", "--group", "projective"], ["correlate", "--group", "nonprojective"],
            ["compare", "arc_eager", "arc_standard"]):
    print("parsebias", " ".join(cmd))
    code = main([*cmd, "--manifest", str(manifest), "-q"])
    if code:
        sys.exit(code)

out = work / "out"
print("\nUAS over the whole test set")
for row in csv.DictReader(open(out / "uas.csv")):
    if row["bin"] == "all":
        print(f"  {row['treebank']:13s} {row['system']:15s} {float(row['uas']):6.2f}  delta {float(row['delta_uas']):+6.2f}")

for group in ("projective", "nonprojective"):
    print(f"\n{group} correlation of delta UAS with mean EMD")
    for row in csv.DictReader(open(out / f"correlate_{group}.csv")):
        if row["status"] == "ok":
            print(f"  {row['bin']:>6}  n={row['n']:>2}  r={float(row['r']):+.3f}  p={float(row['p_value']):.3g}")
        else:
            print(f"  {row['bin']:>6}  {row['status']}")
print(f"\nall tables are in {out}")
