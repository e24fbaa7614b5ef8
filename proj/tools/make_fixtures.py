#!/usr/bin/env python3
"""Builds the evaluation fixtures in data/ from a 512x512 RGB source image.

The 243x512 fixture feeds the concatenated pipeline (243 * 81 = 3^9 rows,
512 = 2^9 columns); the 256x256 fixture feeds the single-image KA baseline.
Both are Lanczos resamples of the same source.
"""
import argparse
import pathlib

from PIL import Image


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("source", help="512x512 RGB PNG")
    parser.add_argument("--name", default="lena")
    parser.add_argument("--out-dir", default=str(pathlib.Path(__file__).parent.parent / "data"))
    args = parser.parse_args()

    src = Image.open(args.source).convert("RGB")
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # PIL sizes are (width, height).
    src.resize((512, 243), Image.LANCZOS).save(out / f"{args.name}_243x512.png", optimize=False)
    src.resize((256, 256), Image.LANCZOS).save(out / f"{args.name}_256x256.png", optimize=False)


if __name__ == "__main__":
    main()
