#!/usr/bin/env python3
#
#   Copyright 2026 The edf Authors
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.
#
"""Runs each edf command with --format json and validates the output."""

import json
import subprocess
import sys

import jsonschema

COMMANDS = [
    ["estimate", "--fitter", "ridge:lambda=1", "--mu", "1,2", "--estimator", "both"],
    ["estimate", "--fitter", "points:at=-1;1", "--mu", "0.3", "--oracle", "quadrature"],
    ["heatmap", "--grid-range", "-1,1", "--grid-step", "1"],
    ["heatmap", "--pixels", "0,5;5,5", "--oracle", "quadrature", "--replicates", "200"],
    ["subset-curve", "--design", "gaussian:n=12,p=4,seed=3", "--method", "fsr"],
    ["scaling", "--A-values", "0,10"],
    ["divergence", "--sigma-values", "1,0.1"],
    ["estimate", "--fitter", "ols", "--design", "gaussian:n=8,p=2,seed=1", "--no-timestamp"],
]


def main():
    if len(sys.argv) != 3:
        sys.exit("usage: validate_json_schema.py <edf binary> <schema>")
    binary, schema_path = sys.argv[1], sys.argv[2]
    with open(schema_path, encoding="utf-8") as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    failures = 0
    for args in COMMANDS:
        argv = [binary] + args + ["--format", "json", "--replicates", "500", "--seed", "5"]
        if "--replicates" in args:
            argv = [binary] + args + ["--format", "json", "--seed", "5"]
        proc = subprocess.run(argv, capture_output=True, text=True, check=False)
        label = " ".join(args)
        if proc.returncode != 0:
            print(f"FAIL {label}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        doc = json.loads(proc.stdout)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        for row in doc["rows"]:
            if list(row.keys()) != doc["columns"]:
                errors.append(f"row keys {list(row.keys())} differ from columns")
                break
        if ("--no-timestamp" in args) == ("timestamp" in doc["metadata"]):
            errors.append("timestamp presence does not follow --no-timestamp")
        if errors:
            failures += 1
            for e in errors:
                print(f"FAIL {label}: {getattr(e, 'message', e)}")
        else:
            print(f"ok   {label} ({len(doc['rows'])} rows)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
