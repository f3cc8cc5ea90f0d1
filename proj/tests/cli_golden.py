#!/usr/bin/env python3
"""simulate + run at a fixed seed; check report schemas, worker invariance and golden numbers.

usage: cli_golden.py NETX FIXTURES SCHEMAS [--update]
"""
import json
import math
import os
import subprocess
import sys
import tempfile

import jsonschema

REPORTS = ["direct", "persistence", "exposure", "upstream", "analytics"]
SEED = 11


def run(*args):
    r = subprocess.run(list(args), capture_output=True, text=True)
    if r.returncode != 0:
        sys.exit(f"command failed ({r.returncode}): {' '.join(args)}\n{r.stderr}")
    return r


def load(path):
    with open(path) as f:
        return json.load(f)


def extract(out):
    """Numbers worth pinning, keyed by a readable path."""
    g = {}
    d = load(os.path.join(out, "reports", "direct.json"))
    for e in d["estimates"]:
        g[f"direct/{e['estimand']}/point"] = e["point"]
        g[f"direct/{e['estimand']}/std_error"] = e["std_error"]
    for e in d["monthly_ri"]:
        g[f"direct/ri/{e['outcome']}/p"] = e["p_value"]
    p = load(os.path.join(out, "reports", "persistence.json"))
    for f in p["fits"]:
        g["persistence/beta"] = f["beta"]
        g["persistence/std_error"] = f["std_error"]
    x = load(os.path.join(out, "reports", "exposure.json"))
    for o in x["outcomes"]:
        for c in o["fit"]["contrasts"]:
            g[f"exposure/{o['outcome']}/{c['name']}"] = c["point"]
            g[f"exposure/{o['outcome']}/{c['name']}/se"] = c["std_error"]
    u = load(os.path.join(out, "reports", "upstream.json"))
    for r in u["results"]:
        g[f"upstream/{r['outcome']}/statistic"] = r["ri"]["statistic"]
        g[f"upstream/{r['outcome']}/p"] = r["ri"]["p_value"]
        g[f"upstream/{r['outcome']}/ci"] = [r["ri"]["ci_low"], r["ri"]["ci_high"]]
    for r in u.get("persistence", {}).get("rows", []):
        g[f"upstream/persistence/{r['tau']}"] = [r["beta_hat"], r["ci_low"], r["ci_high"]]
    a = load(os.path.join(out, "reports", "analytics.json"))
    g["analytics/renewal"] = a["renewal"]["overall_mean"]
    g["analytics/renewal_top80"] = a["renewal_top80"]["overall_mean"]
    g["analytics/ordering"] = a["ordering"]["mean_r"]
    g["analytics/composition"] = a["composition"]["mean_log_followers"]["difference"]
    return g


def close(a, b):
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(close(x, y) for x, y in zip(a, b))
    if a is None or b is None:
        return a is b
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def strip_config(j):
    j = dict(j)
    j.pop("config", None)
    return j


def main():
    netx, fixtures, schemas = sys.argv[1:4]
    update = "--update" in sys.argv[4:]
    failures = []
    with tempfile.TemporaryDirectory() as tmp:
        scenario = os.path.join(fixtures, "scenario_small.toml")
        for name in ("data", "data2"):
            run(netx, "simulate", "--scenario", scenario, "--seed", str(SEED), "--out-dir", os.path.join(tmp, name))
        for f in sorted(os.listdir(os.path.join(tmp, "data"))):
            with open(os.path.join(tmp, "data", f), "rb") as a, open(os.path.join(tmp, "data2", f), "rb") as b:
                if a.read() != b.read():
                    failures.append(f"simulate not byte-identical: {f}")
        config = os.path.join(tmp, "data", "config.toml")
        run(netx, "--workers", "1", "run", "--config", config, "--out-dir", os.path.join(tmp, "run1"))
        run(netx, "--workers", "3", "run", "--config", config, "--out-dir", os.path.join(tmp, "run2"))

        def check(doc, schema_name, label):
            schema = load(os.path.join(schemas, schema_name + ".schema.json"))
            try:
                jsonschema.validate(doc, schema)
            except jsonschema.ValidationError as e:
                failures.append(f"{label}: schema: {e.message}")

        check(load(os.path.join(tmp, "data", "truth.json")), "truth", "truth.json")
        check(load(os.path.join(tmp, "run1", "manifest.json")), "manifest", "manifest.json")
        for r in REPORTS:
            one = load(os.path.join(tmp, "run1", "reports", r + ".json"))
            two = load(os.path.join(tmp, "run2", "reports", r + ".json"))
            check(one, r, r)
            if strip_config(one) != strip_config(two):
                failures.append(f"{r}: differs between 1 and 3 workers")

        got = extract(os.path.join(tmp, "run1"))
        golden_path = os.path.join(fixtures, "golden.json")
        if update:
            with open(golden_path, "w") as f:
                json.dump(got, f, indent=1, sort_keys=True)
                f.write("\n")
            print(f"wrote {golden_path} ({len(got)} values)")
        else:
            want = load(golden_path)
            for k in sorted(set(want) | set(got)):
                if k not in got or k not in want:
                    failures.append(f"golden key mismatch: {k}")
                elif not close(got[k], want[k]):
                    failures.append(f"{k}: got {got[k]}, golden {want[k]}")
            print(f"compared {len(want)} golden values")

    for f in failures:
        print("FAIL", f)
    if failures:
        sys.exit(1)
    print("ok")


if __name__ == "__main__":
    main()
