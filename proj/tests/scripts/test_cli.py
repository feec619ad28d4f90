"""End-to-end checks of the fastpower command-line tool."""

import csv
import io
import json
import os
import pathlib
import signal
import socket
import subprocess
import sys
import tempfile
import time
import urllib.request

CLI = sys.argv[1]
PRESETS = pathlib.Path(sys.argv[2])
FAILURES = []


def check(cond, message):
    if not cond:
        FAILURES.append(message)
        print("FAIL:", message, file=sys.stderr)


def run(*args, timeout=300):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=timeout)


def preset(name):
    return str(PRESETS / f"{name}.json")


def test_curve(tmp):
    r = run("curve", "--spec", preset("gamma-setting-1a"), "--csv", str(tmp / "c.csv"))
    check(r.returncode == 0, f"curve exit {r.returncode}: {r.stderr}")
    doc = json.loads(r.stdout)
    check(doc["result"]["recommendation"] > 2, "curve recommendation missing")
    check(len(doc["result"]["curve"]) == 200, "curve should have 200 points")
    rows = list(csv.DictReader((tmp / "c.csv").open()))
    check(len(rows) == 200 and set(rows[0]) == {"n", "power"}, "csv shape")


def test_seed_reproducible():
    a = run("curve", "--spec", preset("bernoulli-setting-1a"), "--seed", "7", "--m", "256")
    b = run("curve", "--spec", preset("bernoulli-setting-1a"), "--seed", "7", "--m", "256")
    check(a.returncode == 0 and a.stdout == b.stdout, "same seed must give identical output")
    c = run("curve", "--spec", preset("bernoulli-setting-1a"), "--seed", "8", "--m", "256")
    check(json.loads(c.stdout)["spec"]["seed"] == 8, "seed override not applied")


def test_bad_spec(tmp):
    bad = json.loads(pathlib.Path(preset("gamma-setting-1a")).read_text())
    bad["analysis"]["gamma"] = 0.3
    path = tmp / "bad.json"
    path.write_text(json.dumps(bad))
    r = run("curve", "--spec", str(path))
    check(r.returncode == 1, f"invalid spec should exit 1, got {r.returncode}")
    check("analysis.gamma" in r.stderr, f"diagnostic should name the field: {r.stderr!r}")
    (tmp / "junk.json").write_text("{")
    r = run("curve", "--spec", str(tmp / "junk.json"))
    check(r.returncode == 1 and "invalid JSON" in r.stderr, "malformed JSON diagnostic")
    r = run("curve")
    check(r.returncode != 0, "missing --spec must fail")


def test_verify():
    r = run("verify", "--spec", preset("bernoulli-setting-1a"), "--n-grid", "200:400:100", "--reps", "100")
    check(r.returncode == 0, f"verify exit {r.returncode}: {r.stderr}")
    rows = list(csv.DictReader(io.StringIO(r.stdout)))
    check(len(rows) == 3, f"verify should emit one row per grid value, got {len(rows)}")
    check(rows and set(rows[0]) == {"n", "power", "ci_lower", "ci_upper", "reps"}, "verify columns")
    r = run("verify", "--spec", preset("bernoulli-setting-1a"), "--n-grid", "200", "--reps", "99")
    check(r.returncode != 0, "reps below 100 must be rejected")


def test_variance_study():
    r = run("variance-study", "--spec", preset("bernoulli-setting-1a"), "--m", "128", "--reps", "50",
            "--n-grid", "250,300")
    check(r.returncode == 0, f"variance-study exit {r.returncode}: {r.stderr}")
    rows = list(csv.DictReader(io.StringIO(r.stdout)))
    check(len(rows) == 2 and "sobol_sd" in rows[0] and "prng_sd" in rows[0], "variance-study columns")


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve(tmp):
    port = free_port()
    env = dict(os.environ, FASTPOWER_DATA_DIR=str(tmp / "data"))
    proc = subprocess.Popen([CLI, "serve", "--port", str(port)], stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                            text=True, env=env)
    try:
        line = proc.stdout.readline()
        check(f":{port}" in line, f"serve banner: {line!r}")
        body = urllib.request.urlopen(f"http://127.0.0.1:{port}/healthz", timeout=10).read()
        check(json.loads(body)["status"] == "ok", "healthz")
        busy = subprocess.run([CLI, "serve", "--port", str(port)], capture_output=True, text=True, timeout=30, env=env)
        check(busy.returncode != 0, "a second server on a busy port must fail")
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            code = proc.wait(timeout=30)
        except subprocess.TimeoutExpired:
            proc.kill()
            code = None
    check(code == 0, f"serve should exit 0 on SIGINT, got {code}")
    check((tmp / "data" / "index.log").exists() or (tmp / "data").exists(), "data dir created")


def main():
    with tempfile.TemporaryDirectory() as d:
        tmp = pathlib.Path(d)
        for test in (test_curve, test_seed_reproducible, test_bad_spec, test_verify, test_variance_study, test_serve):
            start = time.time()
            try:
                test(tmp) if test.__code__.co_argcount else test()
            except Exception as exc:  # report and continue with the rest
                check(False, f"{test.__name__} raised {exc!r}")
            print(f"{test.__name__}: {time.time() - start:.1f}s")
    if FAILURES:
        print(f"{len(FAILURES)} failures", file=sys.stderr)
        return 1
    print("all CLI checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
