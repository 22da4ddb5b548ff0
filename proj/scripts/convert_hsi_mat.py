#!/usr/bin/env python3
"""Convert a MATLAB hyperspectral cube + ground truth into the hsnn format.

Public HSI scenes (Indian Pines, Pavia University, Salinas) are commonly
distributed as .mat files holding one HxWxB reflectance array and one HxW
label array. This writes the three-file format the engine loads:

  <out>.hsij  JSON header
  <out>.hsib  float32 little-endian values, (row, col, band) order
  <out>.lbl   uint16 little-endian labels, (row, col) order

Usage:
  python3 scripts/convert_hsi_mat.py Indian_pines.mat Indian_pines_gt.mat data/indian_pines
  python3 scripts/convert_hsi_mat.py Salinas.mat Salinas_gt.mat data/salinas \
      --discard 107 108 109 110 111 112 153 154 155 156 157 158 159 160 161 162 163 164 165 166

Pass --discard with the water-absorption band indices when converting a raw
cube; the "corrected" distributions already have them removed.
"""

import argparse
import json
import sys

import numpy as np
import scipy.io


def load_main_array(path, ndim):
    mat = scipy.io.loadmat(path)
    arrays = [v for k, v in mat.items() if not k.startswith("__") and hasattr(v, "ndim")]
    arrays = [a for a in arrays if a.ndim == ndim]
    if len(arrays) != 1:
        sys.exit(f"{path}: expected exactly one {ndim}-D array, found {len(arrays)}")
    return arrays[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("cube_mat", help=".mat file with the HxWxB cube")
    ap.add_argument("labels_mat", help=".mat file with the HxW ground truth")
    ap.add_argument("out_prefix", help="output path prefix")
    ap.add_argument("--discard", type=int, nargs="*", default=[],
                    help="zero-based band indices to declare in the header")
    args = ap.parse_args()

    cube = np.asarray(load_main_array(args.cube_mat, 3), dtype=np.float32)
    labels = np.asarray(load_main_array(args.labels_mat, 2), dtype=np.uint16)
    h, w, bands = cube.shape
    if labels.shape != (h, w):
        sys.exit(f"label grid {labels.shape} does not match cube {(h, w)}")

    header = {"height": h, "width": w, "bands": bands,
              "dtype": "f32le", "band_order": "bip"}
    if args.discard:
        header["discard_bands"] = sorted(args.discard)

    with open(args.out_prefix + ".hsij", "w") as f:
        json.dump(header, f, indent=2)
        f.write("\n")
    cube.astype("<f4").tofile(args.out_prefix + ".hsib")
    labels.astype("<u2").tofile(args.out_prefix + ".lbl")
    print(f"wrote {args.out_prefix}.{{hsij,hsib,lbl}} "
          f"({h}x{w}x{bands}, {int((labels > 0).sum())} labeled pixels, "
          f"{int(labels.max())} classes)")


if __name__ == "__main__":
    main()
