"""Build the gzipped IDX MNIST subset used by the acceptance tests.

Source: the `mnist` npm package (MIT), which bundles 10000 MNIST digits as
pixel intensities in [0,1] rounded to three decimals.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits crates/core/tests/data
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path

N_TRAIN = 2000
N_TEST = 500
SEED = 20240917


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + payload)


def main(src, dst):
    samples = []
    for digit in range(10):
        raw = json.loads(Path(src, f"{digit}.json").read_text())["data"]
        count = len(raw) // 784
        for i in range(count):
            px = raw[i * 784:(i + 1) * 784]
            samples.append((digit, bytes(min(255, round(v * 255)) for v in px)))
    random.Random(SEED).shuffle(samples)
    splits = {"train": samples[:N_TRAIN], "t10k": samples[N_TRAIN:N_TRAIN + N_TEST]}
    for name, rows in splits.items():
        write_idx(Path(dst, f"{name}-images-idx3-ubyte.gz"), 0x803, [len(rows), 28, 28],
                  b"".join(px for _, px in rows))
        write_idx(Path(dst, f"{name}-labels-idx1-ubyte.gz"), 0x801, [len(rows)],
                  bytes(lab for lab, _ in rows))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
