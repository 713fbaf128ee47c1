#!/usr/bin/env python3
# Copyright 2026 The SADT Lab Authors.
# SPDX-License-Identifier: Apache-2.0
"""Builds a small MNIST subset in IDX format from the per-digit JSON files
shipped by the `mnist` npm package (src/digits/<d>.json, each {"data": [...]}
with 784 floats in [0, 1] per image)."""

import argparse
import json
import pathlib
import struct


def load_digits(src):
    digits = {}
    for d in range(10):
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        images = [flat[i:i + 784] for i in range(0, len(flat) - 783, 784)]
        digits[d] = [bytes(min(255, max(0, round(v * 255))) for v in img) for img in images]
    return digits


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def interleave(digits, start, count):
    images, labels = [], []
    i = start
    while len(images) < count:
        added = False
        for d in range(10):
            if i < len(digits[d]) and len(images) < count:
                images.append(digits[d][i])
                labels.append(d)
                added = True
        if not added:
            raise SystemExit(f"not enough digits for {count} samples")
        i += 1
    return images, labels


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("src", type=pathlib.Path, help="directory holding 0.json .. 9.json")
    parser.add_argument("out", type=pathlib.Path)
    parser.add_argument("--test-per-class", type=int, default=100)
    parser.add_argument("--train", type=int, default=4096)
    args = parser.parse_args()

    digits = load_digits(args.src)
    args.out.mkdir(parents=True, exist_ok=True)
    test_images, test_labels = interleave(digits, 0, 10 * args.test_per_class)
    train_images, train_labels = interleave(digits, args.test_per_class, args.train)
    write_idx(args.out / "t10k", test_images, test_labels)
    write_idx(args.out / "train", train_images, train_labels)
    print(f"train {len(train_images)}, test {len(test_images)} -> {args.out}")


if __name__ == "__main__":
    main()
