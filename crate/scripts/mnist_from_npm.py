#!/usr/bin/env python3
"""Convert the 10k digits bundled in the npm `mnist` package into IDX files.

Usage: npm pack mnist && tar xzf mnist-*.tgz && \
       python3 scripts/mnist_from_npm.py package/src/digits data/
"""
import json
import random
import struct
import sys
from pathlib import Path

src, dst = Path(sys.argv[1]), Path(sys.argv[2])
dst.mkdir(parents=True, exist_ok=True)

samples = []
for digit in range(10):
    raw = json.loads((src / f"{digit}.json").read_text())["data"]
    for off in range(0, len(raw), 784):
        px = bytes(max(0, min(255, round(v * 255))) for v in raw[off:off + 784])
        samples.append((px, digit))

# fixed shuffle so that any prefix is roughly class balanced
random.Random(20240201).shuffle(samples)

with open(dst / "mnist10k-images-idx3-ubyte", "wb") as f:
    f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
    for px, _ in samples:
        f.write(px)
with open(dst / "mnist10k-labels-idx1-ubyte", "wb") as f:
    f.write(struct.pack(">II", 0x00000801, len(samples)))
    f.write(bytes(lbl for _, lbl in samples))
print(f"wrote {len(samples)} samples to {dst}")
