#!/usr/bin/env python3
"""Exit codes: 0 ok, 2 bad input or arguments, 3 numerical failure."""
import os
import subprocess
import sys
import tempfile


def code(netx, *args):
    return subprocess.run([netx, *args], capture_output=True, text=True).returncode


def main():
    netx = sys.argv[1]
    failures = []

    def expect(want, *args):
        got = code(netx, *args)
        if got != want:
            failures.append(f"{' '.join(args)}: exit {got}, want {want}")

    with tempfile.TemporaryDirectory() as tmp:
        expect(0, "--help")
        expect(0, "propensity", "--pt", "0.5", "--php", "0.18")
        expect(2, "no-such-command")
        expect(2, "propensity", "--pt", "abc")
        expect(2, "propensity", "--pt", "1.5", "--php", "0.18")
        expect(2, "cluster", "--edges", os.path.join(tmp, "missing.csv"), "--out", os.path.join(tmp, "c.csv"))
        expect(2, "run", "--config", os.path.join(tmp, "missing.toml"))

        bad = os.path.join(tmp, "bad.csv")
        with open(bad, "w") as f:
            f.write("src,dst,weight\na,b,notanumber\n")
        expect(2, "cluster", "--edges", bad, "--out", os.path.join(tmp, "c.csv"))

        expect(0, "simulate", "--seed", "1", "--out-dir", os.path.join(tmp, "sim"))
        data = os.path.join(tmp, "sim")
        expect(2, "estimate", "direct", "--panel", os.path.join(tmp, "nopanel.csv"),
               "--assignment", os.path.join(data, "assignment.csv"))
        expect(2, "estimate", "direct", "--panel", os.path.join(data, "edges.csv"),
               "--assignment", os.path.join(data, "assignment.csv"))

        # flat pre-period outcome: the difference rescale constant is undefined
        posts = os.path.join(tmp, "flat.jsonl")
        periods = os.path.join(tmp, "periods.toml")
        with open(periods, "w") as f:
            f.write('[pre]\nstart = "2023-01-01"\nend = "2023-02-01"\n'
                    '[during]\nstart = "2023-02-01"\nend = "2023-03-01"\n')
        with open(posts, "w") as f:
            f.write('{"user_id": "u1", "post_id": "p1", "ts": "2023-02-05", "hate_score": 0.9}\n')
        expect(3, "panel", "--posts", posts, "--periods", periods, "--users", os.path.join(data, "clusters.csv"),
               "--out", os.path.join(tmp, "panel.csv"))

    for f in failures:
        print("FAIL", f)
    if failures:
        sys.exit(1)
    print("ok")


if __name__ == "__main__":
    main()
