#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Write the small IDX and CIFAR-10 loader fixtures, valid and corrupted.

Usage: make_loader_fixtures.py [--out tests/fixtures]
"""
import argparse
import struct
from pathlib import Path

IDX_PIXELS = [bytes([0, 255, 128, 1, 64, 200]), bytes([10, 20, 30, 40, 50, 60])]
IDX_LABELS = bytes([7, 3])


def idx_images(magic):
    return struct.pack(">IIII", magic, 2, 2, 3) + b"".join(IDX_PIXELS)


def idx_labels(magic):
    return struct.pack(">II", magic, 2) + IDX_LABELS


def cifar_records(second_label):
    out = bytearray()
    for r, label in enumerate([2, second_label]):
        out.append(label)
        out += bytes((r * 37 + c * 11 + p * 3) % 256 for c in range(3) for p in range(1024))
    return bytes(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures")
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "mnist2-images-idx3-ubyte": idx_images(0x803),
        "mnist2-labels-idx1-ubyte": idx_labels(0x801),
        "mnist2-labels-badmagic-idx1-ubyte": idx_labels(0x803),
        "mnist2-images-truncated-idx3-ubyte": idx_images(0x803)[:-1],
        "cifar2.bin": cifar_records(9),
        "cifar2-truncated.bin": cifar_records(9)[:-5],
        "cifar2-badlabel.bin": cifar_records(10),
    }
    for name, data in files.items():
        (out / name).write_bytes(data)


if __name__ == "__main__":
    main()
