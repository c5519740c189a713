#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Build a 10k-sample MNIST subset in IDX format from the `mnist` npm package.

The npm package ships 10,000 real MNIST digits as JSON (intensities in [0,1]
rounded to three decimals). They are quantized back to bytes, shuffled with a
fixed seed and split into 8,000 train / 2,000 test records:

    <out>/train-images-idx3-ubyte  <out>/train-labels-idx1-ubyte
    <out>/t10k-images-idx3-ubyte   <out>/t10k-labels-idx1-ubyte

Usage: make_mnist_subset.py [--package DIR_OR_TGZ] [--out data/mnist10k]
Without --package the tarball is fetched with `npm pack mnist@1.1.0`.
"""
import argparse
import json
import random
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path

N_TRAIN = 8000


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def locate_digits(package, workdir):
    if package is None:
        subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                       stdout=subprocess.DEVNULL)
        package = next(Path(workdir).glob("mnist-*.tgz"))
    package = Path(package)
    if package.is_file():
        with tarfile.open(package) as tar:
            tar.extractall(workdir)
        package = Path(workdir) / "package"
    return package / "src" / "digits"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--package")
    ap.add_argument("--out", default="data/mnist10k")
    ap.add_argument("--seed", type=int, default=20230503)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        digits = locate_digits(args.package, tmp)
        samples = []
        for label in range(10):
            data = json.loads((digits / f"{label}.json").read_text())["data"]
            assert len(data) % 784 == 0
            for i in range(0, len(data), 784):
                pix = [min(255, max(0, round(v * 255))) for v in data[i:i + 784]]
                samples.append((pix, label))

    random.Random(args.seed).shuffle(samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = samples[:N_TRAIN], samples[N_TRAIN:]
    write_idx_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_idx_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_idx_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_idx_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test records to {out}")


if __name__ == "__main__":
    main()
