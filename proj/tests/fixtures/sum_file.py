#!/usr/bin/env python3
import json
import sys

with open(sys.argv[1]) as f:
    req = json.loads(f.readline())
tmp = sys.argv[2] + ".tmp"
with open(tmp, "w") as f:
    f.write(json.dumps({"y": sum(req["x"])}) + "\n")
import os
os.replace(tmp, sys.argv[2])
