#!/usr/bin/env python3
"""Convert the digit tables of the `mnist` npm package into IDX files.

The npm package (https://www.npmjs.com/package/mnist, MIT license) ships
10,000 MNIST digits as JSON arrays of 28x28 pixels scaled to [0, 1] and
rounded to three decimals. Since 1/255 > 0.001, the original byte values
are recovered exactly with round(v * 255).

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_npm_to_idx.py package/src/digits data/mnist --digits 3 8 \
        --test-per-digit 250

Writes <out>/{train,test}-images-idx3-ubyte and the matching label files.
The last N samples of every digit (package order) form the test split; the
rest form the training split. Samples are emitted digit by digit.
"""

import argparse
import json
import pathlib
import struct

SIDE = 28


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=pathlib.Path)
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--digits", type=int, nargs="+", default=list(range(10)))
    parser.add_argument("--test-per-digit", type=int, default=250)
    args = parser.parse_args()

    splits = {"train": (bytearray(), bytearray()), "test": (bytearray(), bytearray())}
    for digit in args.digits:
        raw = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        if len(raw) % (SIDE * SIDE) != 0:
            raise SystemExit(f"{digit}.json: pixel count {len(raw)} is not a multiple of 784")
        count = len(raw) // (SIDE * SIDE)
        if count <= args.test_per_digit:
            raise SystemExit(f"{digit}.json: only {count} samples")
        for k in range(count):
            pixels, labels = splits["train" if k < count - args.test_per_digit else "test"]
            for v in raw[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]:
                b = round(v * 255)
                if not 0 <= b <= 255:
                    raise SystemExit(f"{digit}.json: pixel {v} outside [0, 1]")
                pixels.append(b)
            labels.append(digit)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, (pixels, labels) in splits.items():
        count = len(labels)
        (args.out_dir / f"{name}-images-idx3-ubyte").write_bytes(
            struct.pack(">IIII", 0x00000803, count, SIDE, SIDE) + bytes(pixels))
        (args.out_dir / f"{name}-labels-idx1-ubyte").write_bytes(
            struct.pack(">II", 0x00000801, count) + bytes(labels))
        print(f"wrote {count} {name} samples to {args.out_dir}")


if __name__ == "__main__":
    main()
