#!/usr/bin/env python3
"""Convert the 10k-digit MNIST subset shipped in the `mnist` npm package into IDX files.

Usage:
    cd /tmp && npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_subset_from_npm.py /tmp/package/src/digits data/mnist-10k

Pixel intensities in the package are stored as value/255 rounded to three
decimals; they are mapped back with round(v * 255). Samples are interleaved
round-robin across classes so that any prefix of the file is roughly balanced.
"""
import json
import os
import struct
import sys


def main(src, dst):
    per_class = []
    for digit in range(10):
        with open(os.path.join(src, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        n = len(flat) // 784
        per_class.append([flat[i * 784:(i + 1) * 784] for i in range(n)])

    images, labels = [], []
    cursor = [0] * 10
    while any(cursor[d] < len(per_class[d]) for d in range(10)):
        for d in range(10):
            if cursor[d] < len(per_class[d]):
                images.append(per_class[d][cursor[d]])
                labels.append(d)
                cursor[d] += 1

    os.makedirs(dst, exist_ok=True)
    with open(os.path.join(dst, "images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(bytes(min(255, max(0, round(v * 255))) for img in images for v in img))
    with open(os.path.join(dst, "labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} samples to {dst}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
