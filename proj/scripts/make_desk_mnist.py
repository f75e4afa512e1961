#!/usr/bin/env python3
"""Build a desk-scale MNIST subset in IDX format.

Source: the `mnist` npm package (MIT), which ships 10,000 genuine MNIST
digits as JSON, one file per class, pixels quantized to v/255. This script
recovers the uint8 pixels, makes a stratified 8000/2000 train/test split
(seeded), and writes standard IDX files (big-endian magic 0x803/0x801).

Usage: make_desk_mnist.py <npm-mnist-src-digits-dir> <out-dir>
"""
import json
import struct
import sys
from pathlib import Path

import numpy as np

SEED = 20240501


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n = images.shape[0]
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    src = Path(sys.argv[1])
    out = Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(SEED)
    train_x, train_y, test_x, test_y = [], [], [], []
    test_frac = 0.2
    for digit in range(10):
        with open(src / f"{digit}.json") as f:
            flat = np.asarray(json.load(f)["data"], dtype=np.float64)
        imgs = np.rint(flat.reshape(-1, 784) * 255.0).astype(np.uint8)
        order = rng.permutation(imgs.shape[0])
        imgs = imgs[order]
        n_test = int(round(imgs.shape[0] * test_frac))
        test_x.append(imgs[:n_test])
        test_y.append(np.full(n_test, digit, dtype=np.uint8))
        train_x.append(imgs[n_test:])
        train_y.append(np.full(imgs.shape[0] - n_test, digit, dtype=np.uint8))

    def shuffled(xs, ys):
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        order = rng.permutation(x.shape[0])
        return x[order], y[order]

    tr_x, tr_y = shuffled(train_x, train_y)
    te_x, te_y = shuffled(test_x, test_y)
    write_idx_images(out / "train-images-idx3-ubyte", tr_x)
    write_idx_labels(out / "train-labels-idx1-ubyte", tr_y)
    write_idx_images(out / "test-images-idx3-ubyte", te_x)
    write_idx_labels(out / "test-labels-idx1-ubyte", te_y)
    print(f"train={tr_x.shape[0]} test={te_x.shape[0]} -> {out}")


if __name__ == "__main__":
    main()
