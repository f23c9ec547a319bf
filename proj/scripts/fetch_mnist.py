#!/usr/bin/env python3
"""Fetch MNIST IDX files and write the gzip subset used by the desk run.

The official IDX files are shipped inside the `mnist-data` npm package, so
`npm pack` is enough to get them without a direct download. Writes
train-images-idx3-ubyte.gz / train-labels-idx1-ubyte.gz (first --train
samples of the training set) and the full t10k test files into --out.
"""
import argparse
import gzip
import pathlib
import shutil
import struct
import subprocess
import tarfile
import tempfile

FILES = {
    "train-images-idx3-ubyte": 0x803,
    "train-labels-idx1-ubyte": 0x801,
    "t10k-images-idx3-ubyte": 0x803,
    "t10k-labels-idx1-ubyte": 0x801,
}


def truncate_idx(raw: bytes, magic: int, count: int) -> bytes:
    got, n = struct.unpack(">II", raw[:8])
    if got != magic:
        raise SystemExit(f"bad magic {got:#x}, expected {magic:#x}")
    dims = raw[3]
    shape = struct.unpack(">" + "I" * dims, raw[4 : 4 + 4 * dims])
    item = 1
    for s in shape[1:]:
        item *= s
    count = min(count, n)
    header = struct.pack(">I", magic) + struct.pack(">I", count) + raw[8 : 4 + 4 * dims]
    start = 4 + 4 * dims
    return header + raw[start : start + count * item]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "mnist"))
    ap.add_argument("--train", type=int, default=10000)
    ap.add_argument("--package", default="mnist-data@1.2.6")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", args.package], cwd=tmp, check=True, stdout=subprocess.DEVNULL)
        tgz = next(pathlib.Path(tmp).glob("*.tgz"))
        with tarfile.open(tgz) as tf:
            for name, magic in FILES.items():
                raw = tf.extractfile(f"package/data/{name}").read()
                limit = args.train if name.startswith("train") else 1 << 31
                data = truncate_idx(raw, magic, limit)
                with gzip.GzipFile(out / f"{name}.gz", "wb", mtime=0) as f:
                    f.write(data)
                print(f"{name}.gz: {struct.unpack('>I', data[4:8])[0]} items")


if __name__ == "__main__":
    main()
