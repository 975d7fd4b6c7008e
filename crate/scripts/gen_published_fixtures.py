#!/usr/bin/env python3
"""Generate the six-candidate comparison fixture used by the acceptance suite.

Per-example evidence (coverage counters, review id sets, parameterized
annotations, lifecycle hooks, compiler logs, issue exports) is searched so
that the per-candidate means render to the published two-decimal cells and
the weighted totals render to the published totals.

Usage: python3 scripts/gen_published_fixtures.py [output_dir]
"""
import itertools
import json
import os
import random
import shutil
import sys
from fractions import Fraction

import numpy as np

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
    os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures", "published")

CANDIDATES = [
    # id, model, version, prompt version, date
    ("chatgpt4-mar24", "ChatGPT-4", "1st Time", 1, "2024-03-15"),
    ("chatgpt4-may24", "ChatGPT-4", "Iterative", 2, "2024-05-20"),
    ("gpt-o-dec24", "GPT-o", "", 3, "2024-12-10"),
    ("o1-preview-dec24", "o1-Preview", "", 3, "2024-12-10"),
    ("o1-mini-dec24", "o1-Mini", "", 3, "2024-12-10"),
    ("claude35-sonnet-dec24", "Claude 3.5 Sonnet", "", 3, "2024-12-10"),
]

FUNCTIONS = [
    ("isPrime", "unit"),
    ("calculateDiscount", "unit"),
    ("parseIsoDate", "unit"),
    ("validateIban", "unit"),
    ("transferFunds", "integration"),
    ("generateInvoice", "integration"),
    ("findCustomerByEmail", "integration"),
]

CE = [31, 3, 2, 0, 7, 0]
SAI = [45, 18, 29, 15, 10, 13]
STU = [100.00, 100.00, 100.00, 100.00, 85.71, 100.00]
LC = [39.14, 65.57, 70.14, 98.00, 28.57, 95.71]
BC = [39.14, 65.57, 71.29, 95.71, 28.57, 94.00]
BDC = [36.57, 61.57, 68.29, 95.71, 28.57, 93.29]
TI = [85.71, 100.00, 100.00, 100.00, 100.00, 100.00]
EPC = [71.19, 75.00, 79.88, 84.52, 85.12, 86.90]
BVA = [69.39, 71.77, 78.20, 81.53, 83.57, 83.67]
TP = [12.70, 38.89, 83.81, 91.84, 88.10, 88.89]
EGTC = [65.77, 75.36, 66.23, 97.94, 81.57, 91.48]
TOTALS = [32.44, 67.96, 74.97, 91.76, 63.81, 90.72]

# Per-function denominator ranges (shared by every candidate); concrete
# values are searched with a fixed seed so the fixture is reproducible.
RANGES = {
    "lc": (18, 40), "bc": (6, 18), "bdc": (8, 24), "ti": (1, 6),
    "epc": (4, 12), "bva": (4, 12), "tp": (2, 9), "egtc": (6, 30),
}

N = len(FUNCTIONS)


def ratio(num, den):
    return Fraction(1) if den == 0 else Fraction(num, den)


def half_up(x):
    # x is a Fraction in percent
    scaled = x * 100
    q = (scaled * 2 + 1) // 2 if scaled >= 0 else -((-scaled * 2 + 1) // 2)
    return Fraction(q, 100)


_DELTAS = np.array(list(itertools.product(range(-3, 4), repeat=7)), dtype=np.int64)


def search(dens, target_pct, aim_pct):
    """Pick numerators whose mean ratio renders to target_pct, closest to aim_pct."""
    centre = Fraction(target_pct).limit_denominator(100) / 100
    lo = centre - Fraction(45, 1000000)
    hi = centre + Fraction(45, 1000000)
    aim = float(aim_pct) / 100
    d = np.array(dens, dtype=np.int64)
    start = np.round(aim * d).astype(np.int64)
    nums = start + _DELTAS
    ok = np.all((nums >= 0) & (nums <= d), axis=1) & np.all((d > 0) | (nums == 0), axis=1)
    safe = np.where(d > 0, d, 1)
    ratios = np.where(d > 0, nums / safe, 1.0)
    means = ratios.mean(axis=1)
    inside = ok & (means >= float(lo) - 1e-12) & (means <= float(hi) + 1e-12)
    order = np.argsort(np.where(inside, np.abs(means - aim), np.inf))
    for idx in order[:50]:
        if not inside[idx]:
            break
        full = [int(x) for x in nums[idx]]
        mean = sum(ratio(n, dd) for n, dd in zip(full, dens)) / N
        if lo <= mean <= hi:
            return full, mean
    raise LookupError(f"no numerators for {target_pct} over {dens}")


def total(ce_ratio, sai_ratio, m):
    wb = (m["lc"] + m["bc"] + m["bdc"] + m["ti"]) / 4
    bb = (m["epc"] + m["bva"] + m["tp"] + m["egtc"]) / 4
    return -20 * ce_ratio - 5 * sai_ratio + 10 * m["stu"] + 40 * wb + 50 * bb


def split_count(total_count, weights_seed):
    rng = random.Random(weights_seed)
    parts = [0] * N
    for _ in range(total_count):
        parts[rng.randrange(N)] += 1
    return parts


def main():
    if os.path.exists(OUT):
        shutil.rmtree(OUT)
    os.makedirs(OUT)

    # Aim offsets (percent) per candidate. o1-Preview needs its raw values
    # near the top of each rounding interval to reach 91.76; the two
    # ChatGPT-4 runs are pulled apart so their raw totals differ by < 35.525.
    aims = {0: 0.003, 1: -0.003, 3: 0.0045}
    rows = {"lc": LC, "bc": BC, "bdc": BDC, "ti": TI, "epc": EPC, "bva": BVA, "tp": TP, "egtc": EGTC}
    rng = random.Random(20240315)
    dens = {}
    chosen = {}
    for key, row in rows.items():
        lo, hi = RANGES[key]
        for attempt in range(400):
            d = [rng.randint(lo, hi) for _ in range(N)]
            if key == "ti":
                d[0] = 0  # pure function: nothing to isolate
            try:
                picks = []
                for c in range(len(CANDIDATES)):
                    if row[c] == 100.0:
                        picks.append((list(d), Fraction(1)))
                    else:
                        picks.append(search(d, row[c], row[c] + aims.get(c, 0.0)))
            except LookupError:
                continue
            dens[key] = d
            chosen[key] = picks
            print(f"{key}: denominators {d} after {attempt + 1} tries")
            break
        else:
            raise SystemExit(f"no denominators for {key}")
    global LINES, BRANCHES, DECISIONS, CLASSES, BOUNDS, PARAMS, SCENARIOS, ISOLATED
    LINES, BRANCHES, DECISIONS = dens["lc"], dens["bc"], dens["bdc"]
    CLASSES, BOUNDS, PARAMS = dens["epc"], dens["bva"], dens["tp"]
    SCENARIOS, ISOLATED = dens["egtc"], dens["ti"]

    plan = []
    raw_totals = []
    for c in range(len(CANDIDATES)):
        m = {}
        nums = {}
        for key in rows:
            nums[key], m[key] = chosen[key][c]
        # STU: which examples have valid lifecycle hooks
        valid = [True] * N
        if STU[c] != 100.0:
            k = N - round(STU[c] / 100 * N)
            for i in range(k):
                valid[N - 1 - i] = False
        m["stu"] = Fraction(sum(valid), N)
        assert half_up(m["stu"] * 100) == Fraction(STU[c]).limit_denominator(100)
        ce_ratio = Fraction(CE[c], max(CE)) if max(CE) else Fraction(0)
        sai_ratio = Fraction(SAI[c], max(SAI)) if max(SAI) else Fraction(0)
        t = total(ce_ratio, sai_ratio, m)
        shown = half_up(t)
        print(f"{CANDIDATES[c][0]}: total {float(t):.6f} -> {float(shown):.2f} (want {TOTALS[c]})")
        assert shown == Fraction(TOTALS[c]).limit_denominator(100), "total cell mismatch"
        plan.append((nums, valid))
        raw_totals.append(t)
    delta = raw_totals[1] - raw_totals[0]
    print(f"may - mar raw delta {float(delta):.6f}")
    assert half_up(delta) == Fraction(3552, 100), "longitudinal delta mismatch"

    catalog = {"catalog_id": "lks-seven-2024", "functions": []}
    for f, (name, kind) in enumerate(FUNCTIONS):
        classes = []
        for i in range(CLASSES[f]):
            classes.append({
                "id": f"EC{i + 1}",
                "description": f"{name} input partition {i + 1}",
                "validity": "valid" if i % 3 != 2 else "invalid",
            })
        catalog["functions"].append({
            "name": name,
            "kind": kind,
            "equivalence_classes": classes,
            "boundary_values": [
                {"id": f"BV{i + 1}", "description": f"{name} boundary {i + 1}"}
                for i in range(BOUNDS[f])
            ],
            "expected_parameterized_tests": PARAMS[f],
            "expert_scenarios": [
                {"id": f"SC{i + 1}", "description": f"{name} expert scenario {i + 1}"}
                for i in range(SCENARIOS[f])
            ],
            "expected_isolated_tests": ISOLATED[f],
        })
    write_json(os.path.join(OUT, "catalog.json"), catalog)
    write_json(os.path.join(OUT, "weights.json"), {
        "w_ce": -20.0, "w_sai": -5.0, "w_stu": 10.0, "w_whitebox": 40.0, "w_blackbox": 50.0,
    })

    for c, (cid, model, version, prompt_version, date) in enumerate(CANDIDATES):
        nums, valid = plan[c]
        ce_split = [5, 0, 3, 10, 2, 7, 4] if c == 0 else split_count(CE[c], 100 + c)
        sai_split = split_count(SAI[c], 200 + c)
        assert sum(ce_split) == CE[c] and sum(sai_split) == SAI[c]
        for f, (name, kind) in enumerate(FUNCTIONS):
            base = os.path.join(OUT, "artifacts", cid, name)
            os.makedirs(os.path.join(base, "src"), exist_ok=True)
            write_text(os.path.join(base, "build.log"), build_log(name, ce_split[f]))
            write_json(os.path.join(base, "issues.json"), issues(name, sai_split[f], c, f))
            write_text(os.path.join(base, "coverage.xml"), coverage_xml(
                name, nums["lc"][f], LINES[f], nums["bc"][f], BRANCHES[f],
                nums["bdc"][f], DECISIONS[f]))
            params = nums["tp"][f]
            tests = params + 2 + (f % 3)
            write_text(os.path.join(base, "tests.xml"), tests_xml(name, tests))
            write_text(os.path.join(base, "src", f"{cap(name)}Test.java"),
                       java_source(name, kind, params, tests - params, valid[f]))

            review = {
                "candidate_id": cid,
                "function_name": name,
                "covered_equivalence_class_ids": pick("EC", CLASSES[f], nums["epc"][f], c + f),
                "covered_boundary_value_ids": pick("BV", BOUNDS[f], nums["bva"][f], c * 2 + f),
                "replicated_scenario_ids": pick("SC", SCENARIOS[f], nums["egtc"][f], c * 3 + f),
                "isolated_test_count": nums["ti"][f],
                "reviewer": "qa-lead",
                "reviewed_at": date,
            }
            write_json(os.path.join(OUT, "reviews", cid, f"{name}.json"), review)

    stages = {
        "generate": {"command": "cp -r artifacts/{candidate}/{function}/src {outdir}/src", "artifact": "src"},
        "build": {"command": "cat artifacts/{candidate}/{function}/build.log; exit $(grep -c '^\\[ERROR\\] /' artifacts/{candidate}/{function}/build.log)", "artifact": "build.log"},
        "static_analysis": {"command": "cp artifacts/{candidate}/{function}/issues.json {outdir}/issues.json", "artifact": "issues.json"},
        "coverage": {"command": "cp artifacts/{candidate}/{function}/coverage.xml {outdir}/coverage.xml", "artifact": "coverage.xml", "format": "xml"},
        "test_run": {"command": "cp artifacts/{candidate}/{function}/tests.xml {outdir}/tests.xml", "artifact": "tests.xml"},
    }

    def config(name, ids):
        return {
            "catalog": "catalog.json",
            "reviews": "reviews",
            "weights": "weights.json",
            "output_dir": f"out/{name}",
            "candidates": [
                {
                    "candidate_id": cid,
                    "model_name": model,
                    "model_version": version,
                    "prompt": {"prompt_id": "unit-test-generator", "version": pv},
                    "date": date,
                }
                for (cid, model, version, pv, date) in CANDIDATES if cid in ids
            ],
            "adapters": stages,
            "thresholds": {"min_total": 80.0, "max_ce": 0},
            "workers": 4,
        }

    all_ids = [c[0] for c in CANDIDATES]
    write_json(os.path.join(OUT, "published.json"), config("published", all_ids))
    write_json(os.path.join(OUT, "mar24.json"), config("mar24", all_ids[:1]))
    write_json(os.path.join(OUT, "may24.json"), config("may24", all_ids[:2]))


def pick(prefix, count, n, seed):
    rng = random.Random(seed)
    ids = [f"{prefix}{i + 1}" for i in range(count)]
    chosen = sorted(rng.sample(ids, n), key=lambda s: int(s[len(prefix):]))
    return chosen


def cap(name):
    return name[0].upper() + name[1:]


def build_log(name, errors):
    lines = [
        "[INFO] Scanning for projects...",
        "[INFO] --- maven-compiler-plugin:3.11.0:testCompile (default-testCompile) @ lks-core ---",
        "[INFO] Compiling 1 source file to target/test-classes",
    ]
    if errors:
        lines.append("[INFO] -------------------------------------------------------------")
        lines.append("[ERROR] COMPILATION ERROR : ")
        lines.append("[INFO] -------------------------------------------------------------")
        for i in range(errors):
            lines.append(
                f"[ERROR] /work/src/test/java/com/lks/{cap(name)}Test.java:[{12 + 7 * i},{9 + i % 5}] "
                + ["cannot find symbol", "incompatible types: int cannot be converted to String",
                   "package org.mockito.junit does not exist", "constructor Invoice in class Invoice cannot be applied to given types"][i % 4])
        lines.append(f"[INFO] {errors} error{'s' if errors != 1 else ''}")
        lines.append("[INFO] BUILD FAILURE")
    else:
        lines.append("[INFO] BUILD SUCCESS")
    return "\n".join(lines) + "\n"


RULES = [
    ("java:S5786", "MINOR", "CODE_SMELL", "Remove this 'public' modifier."),
    ("java:S2699", "BLOCKER", "CODE_SMELL", "Add at least one assertion to this test case."),
    ("java:S1192", "CRITICAL", "CODE_SMELL", "Define a constant instead of duplicating this literal."),
    ("java:S2925", "MAJOR", "BUG", "Remove this use of \"Thread.sleep()\"."),
    ("java:S6437", "BLOCKER", "VULNERABILITY", "Revoke and change this password, as it is compromised."),
    ("java:S1128", "MINOR", "CODE_SMELL", "Remove this unused import."),
]


def issues(name, count, c, f):
    out = []
    for i in range(count):
        rule, sev, typ, msg = RULES[(i + c + f) % len(RULES)]
        out.append({
            "ruleId": rule, "severity": sev, "type": typ,
            "file": f"src/test/java/com/lks/{cap(name)}Test.java",
            "line": 10 + 3 * i, "message": msg,
        })
    return {"issues": out}


def coverage_xml(name, lc, lt, bc, bt, dc, dt):
    def counters(indent):
        return "".join(
            f'{indent}<counter type="{t}" missed="{tot - cov}" covered="{cov}"/>\n'
            for t, cov, tot in [("LINE", lc, lt), ("BRANCH", bc, bt), ("DECISION", dc, dt)])
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<!DOCTYPE report PUBLIC "-//JACOCO//DTD Report 1.1//EN" "report.dtd">\n'
        f'<report name="{name}">\n'
        '  <sessioninfo id="fixture" start="0" dump="0"/>\n'
        '  <package name="com/lks">\n'
        f'    <class name="com/lks/{cap(name)}" sourcefilename="{cap(name)}.java">\n'
        f'      <method name="{name}" desc="()V" line="10">\n'
        + counters("        ") +
        '      </method>\n'
        + counters("      ") +
        '    </class>\n'
        + counters("    ") +
        '  </package>\n'
        + counters("  ") +
        '</report>\n')


def tests_xml(name, tests):
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<testsuite name="com.lks.{cap(name)}Test" tests="{tests}" failures="0" errors="0" skipped="0" time="0.412">\n'
        + "".join(f'  <testcase name="case{i + 1}" classname="com.lks.{cap(name)}Test" time="0.01"/>\n' for i in range(tests))
        + '</testsuite>\n')


def java_source(name, kind, params, plain, hooks):
    cls = f"{cap(name)}Test"
    out = [
        "package com.lks;",
        "",
        "import org.junit.jupiter.api.*;",
        "import org.junit.jupiter.params.ParameterizedTest;",
        "import org.junit.jupiter.params.provider.CsvSource;",
    ]
    if kind == "integration":
        out += [
            "import org.junit.jupiter.api.extension.ExtendWith;",
            "import org.mockito.Mock;",
            "import org.mockito.junit.jupiter.MockitoExtension;",
        ]
    out.append("")
    out.append("// Generated suite; \"@Test\" inside strings must not be counted.")
    if kind == "integration":
        out.append("@ExtendWith(MockitoExtension.class)")
    out.append(f"class {cls} {{")
    if kind == "integration":
        out += ["", "    @Mock", "    private Repository repository;"]
    out.append("")
    out.append(f"    private {cap(name)} subject;")
    if hooks:
        out += ["", "    @BeforeEach", "    void setUp() {", f"        subject = new {cap(name)}();", "    }"]
    for i in range(params):
        out += [
            "",
            "    @ParameterizedTest",
            '    @CsvSource({"1, true", "4, false"})',
            f"    void parameterizedCase{i + 1}(int input, boolean expected) {{",
            f"        Assertions.assertEquals(expected, subject != null);",
            "    }",
        ]
    for i in range(plain):
        out += [
            "",
            "    @Test",
            f"    void plainCase{i + 1}() {{",
            '        String label = "@Test @BeforeEach";',
            "        /* @ParameterizedTest in a comment */",
            "        Assertions.assertNotNull(label);",
            "    }",
        ]
    out.append("}")
    return "\n".join(out) + "\n"


def write_json(path, value):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(value, fh, indent=2)
        fh.write("\n")


def write_text(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


if __name__ == "__main__":
    main()
