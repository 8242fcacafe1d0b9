#!/usr/bin/env python3
# Recomputes summary statistics straight from ndjson journals.
# Usage: recompute_summary.py journal...
import json
import statistics
import sys

groups = {}
order = []
for path in sys.argv[1:]:
    algo = batch = None
    best = None
    total = 0.0
    with open(path) as f:
        for line in f:
            rec = json.loads(line)
            if rec["kind"] == "start":
                algo, batch = rec["algo"], rec["batch"]
            elif rec["kind"] == "observation":
                best = rec["value"] if best is None else min(best, rec["value"])
            elif rec["kind"] == "end":
                total = rec["total_time"]
    key = (algo, batch)
    if key not in groups:
        groups[key] = ([], [])
        order.append(key)
    groups[key][0].append(best)
    groups[key][1].append(total)

for key in order:
    finals, times = groups[key]
    sd = statistics.stdev(finals) if len(finals) > 1 else 0.0
    print("%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d" % (key[0], key[1], min(finals), max(finals),
          statistics.fmean(finals), sd, statistics.fmean(times), len(finals)))
