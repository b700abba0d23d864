"""End-to-end checks of the command-line tool: exit codes, determinism and
report schemas."""
import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

BIN = sys.argv[1]
SCHEMAS = pathlib.Path(sys.argv[2])
failures = []


def run(*args, expect=0):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        failures.append(f"{' '.join(map(str, args))}: exit {proc.returncode}, wanted {expect}\n{proc.stderr}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


def validate(text, schema_name):
    schema = json.loads((SCHEMAS / f"{schema_name}.schema.json").read_text())
    doc = json.loads(text)
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        failures.append(f"{schema_name}: {e.message}")
    return doc


with tempfile.TemporaryDirectory() as tmp:
    d = pathlib.Path(tmp)
    train, test, toy = d / "train.csv", d / "test.csv", d / "toy.csv"

    run("gen", "--toy", "--D", 1, "--r", 10, "--m", 20, "--seed", 7, "--out", toy)
    check(len(toy.read_text().splitlines()) == 40, "toy generator should write 40 rows")
    run("gen", "--classes", 2, "--per-class", 15, "--dim", 2, "--separation", 3, "--stddev", 0.8,
        "--seed", 1, "--out", train)
    run("gen", "--classes", 2, "--per-class", 5, "--dim", 2, "--separation", 3, "--stddev", 0.8,
        "--seed", 2, "--out", test)

    run("preprocess", "--data", train, "--sigma", 0.5, "--out", d / "kept.csv", "--report", d / "pre.json")
    doc = validate((d / "pre.json").read_text(), "preprocess")
    kept_rows = len((d / "kept.csv").read_text().splitlines())
    check(doc["kept"] == kept_rows == 30 - len(doc["removed_indices"]), "preprocess counts disagree")

    pred = run("predict", "--train", train, "--tau", 1, "--test", test)
    rows = list(csv.DictReader(pred.stdout.splitlines()))
    check(len(rows) == 10, "predict should emit one row per test point")

    validate(run("attack", "--train", train, "--tau", 1, "--test", test, "--seed", 3).stdout, "attack")
    validate(run("attack", "--train", train, "--tau", 1, "--test", test, "--seed", 3, "--method", "approx").stdout,
             "attack")

    zero = validate(run("eval", "--train", train, "--tau", 0, "--test", test, "--seed", 3, "--trials", 5).stdout,
                    "eval")
    check(zero["report"]["d_nat"] == 1.0 and zero["report"]["e_adv_mean"] == 0.0,
          "tau = 0 should abstain everywhere and never be attacked")
    one = run("--threads", 1, "eval", "--train", train, "--tau", 1, "--test", test, "--seed", 3, "--trials", 20).stdout
    three = run("--threads", 3, "eval", "--train", train, "--tau", 1, "--test", test, "--seed", 3, "--trials", 20).stdout
    validate(one, "eval")
    check(one == three, "eval output depends on the worker count")
    validate(run("eval", "--train", train, "--tau", 1, "--test", test, "--seed", 3, "--trials", 20,
                 "--adversary", "kappa", "--kappa-p", 0.5, "--kappa-q", 0.1, "--ci", "clopper-pearson").stdout,
             "eval")

    curve = run("curve", "--train", train, "--test", test, "--seed", 3, "--subspaces", 3).stdout.splitlines()
    check(curve[0] == "tau,e_adv,d_nat,g", "curve header")
    pts = [tuple(map(float, line.split(","))) for line in curve[1:]]
    check(all(a[1] <= b[1] and a[2] >= b[2] for a, b in zip(pts, pts[1:])), "curves must be monotone")

    tune = ["tune", "--train", train, "--test", test, "--rounds", 30, "--batch", 5, "--seed", 11]
    first, second = run(*tune).stdout, run(*tune, "--csv", d / "cum.csv").stdout
    check(first == second, "tune output is not byte-identical across runs")
    doc = validate(first, "tune_online")
    check(len(doc["tau_history"]) == 30, "one threshold per round")
    check((d / "cum.csv").read_text().startswith("tau"), "cumulative utility CSV")
    validate(run("tune", "--mode", "grid", "--train", train, "--test", test, "--tau-grid", "0.5,1,1.5",
                 "--sigma-grid", "0,0.5", "--seed", 11).stdout, "tune_grid")

    validate(run("bounds", "--seed", 1, "--effort", 0.01).stdout, "bounds")
    validate(run("toy", "--seed", 1, "--trials", 2000).stdout, "toy")

    # Usage errors exit 1, runtime errors exit 2.
    run("bogus", expect=1)
    run("eval", "--train", train, "--tau", 1, "--test", test, expect=1)  # no seed
    run("eval", "--train", train, "--tau", 1, "--test", test, "--seed", 1, "--no-such-flag", expect=1)
    run("eval", "--train", train, "--tau", -1, "--test", test, "--seed", 1, expect=1)
    run("eval", "--train", d / "missing.csv", "--tau", 1, "--test", test, "--seed", 1, expect=2)
    bad = d / "bad.csv"
    bad.write_text("0,1,2\n1,3\n")
    run("predict", "--train", bad, "--tau", 1, "--test", test, expect=2)

for f in failures:
    print("FAIL:", f)
print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
