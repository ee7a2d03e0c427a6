#!/usr/bin/env python3
"""Write a reduced gzipped copy of the MNIST IDX files.

Keeps the first N training images (default 10000) and the whole test set.
The source directory holds the four uncompressed or gzipped IDX files, e.g.
the `data/` folder of the `mnist-data` npm package.

Usage: mnist_subset.py <source dir> <out dir> [--train 10000]
"""
import argparse
import gzip
import struct
from pathlib import Path


def read_idx(directory, stem):
    for name in (stem, stem + ".gz"):
        path = Path(directory) / name
        if path.exists():
            raw = path.read_bytes()
            return gzip.decompress(raw) if name.endswith(".gz") else raw
    raise SystemExit(f"missing {stem} in {directory}")


def truncate(raw, count):
    magic, n = struct.unpack(">II", raw[:8])
    ndim = magic & 0xFF
    dims = struct.unpack(">" + "I" * ndim, raw[4:4 + 4 * ndim])
    item = 1
    for d in dims[1:]:
        item *= d
    keep = min(count, n)
    header = struct.pack(">I", magic) + struct.pack(">I", keep) + raw[8:4 + 4 * ndim]
    start = 4 + 4 * ndim
    return header + raw[start:start + keep * item], keep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source")
    ap.add_argument("out")
    ap.add_argument("--train", type=int, default=10000)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for prefix, count in (("train", args.train), ("t10k", 1 << 31)):
        for kind in ("images-idx3-ubyte", "labels-idx1-ubyte"):
            data, keep = truncate(read_idx(args.source, f"{prefix}-{kind}"), count)
            with gzip.GzipFile(out / f"{prefix}-{kind}.gz", "wb", mtime=0) as f:
                f.write(data)
        print(f"{prefix}: {keep} images")


if __name__ == "__main__":
    main()
