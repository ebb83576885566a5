#!/usr/bin/env python3
"""Convert a wide survey export into the long `user_id,element_id,answer` CSV.

The input has one row per respondent and one column per question. Answers
are Likert integers (1..5 by default); blank or non-numeric cells are skipped
as unknown. The output keeps the raw scale, so ingest it with `--scale 1:5`.

    python3 scripts/convert_survey.py survey.csv --id-column respondent \
        --drop-column timestamp > answers.csv
"""

import argparse
import csv
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input")
    ap.add_argument("--id-column", help="respondent id column; row numbers otherwise")
    ap.add_argument("--drop-column", action="append", default=[], help="non-question column")
    ap.add_argument("--min", type=int, default=1)
    ap.add_argument("--max", type=int, default=5)
    ap.add_argument("-o", "--output", help="output path; stdout otherwise")
    args = ap.parse_args()

    with open(args.input, newline="", encoding="utf-8-sig") as f:
        reader = csv.DictReader(f)
        if args.id_column and args.id_column not in reader.fieldnames:
            sys.exit(f"no column {args.id_column!r} in {args.input}")
        skip = set(args.drop_column) | {args.id_column}
        questions = [c for c in reader.fieldnames if c not in skip]
        rows = list(reader)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["user_id", "element_id", "answer"])
    seen = set()
    dropped = 0
    for i, row in enumerate(rows, start=1):
        user = row[args.id_column].strip() if args.id_column else f"r{i:05d}"
        if user in seen:
            sys.exit(f"duplicate respondent {user!r} on data row {i}")
        seen.add(user)
        for q in questions:
            cell = (row.get(q) or "").strip()
            try:
                answer = int(float(cell))
            except ValueError:
                continue
            if not args.min <= answer <= args.max:
                dropped += 1
                continue
            writer.writerow([user, q.strip(), answer])
    if dropped:
        print(f"dropped {dropped} out-of-range answers", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
