"""Regenerate the JPEG-LS reference fixtures.

Each fixture is a binary PGM plus the stream CharLS produces for it with
default coding parameters. Requires `numpy` and `imagecodecs` (CharLS 2.4.x).
The .jls files are the oracle: the Rust encoder must reproduce the frame
bytes exactly and the Rust decoder must reconstruct the PGM.

    python gen_fixtures.py
"""

import pathlib

import imagecodecs
import numpy as np

HERE = pathlib.Path(__file__).resolve().parent


def write_pgm(path, img):
    h, w = img.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img.astype(np.uint8).tobytes())


def fixtures():
    rng = np.random.default_rng(20180524)
    yy, xx = np.mgrid[0:16, 0:16]
    yield "gradient16", ((xx * 13 + yy * 7 + (xx * yy) % 5) % 256).astype(np.uint8)
    yield "single1x1", np.array([[42]], dtype=np.uint8)
    yield "flat8", np.full((8, 8), 200, dtype=np.uint8)
    yield "noise37x23", rng.integers(0, 256, size=(23, 37), dtype=np.uint8)

    yy, xx = np.mgrid[0:64, 0:64]
    smooth = 128 + 60 * np.sin(xx / 9.0) * np.cos(yy / 13.0)
    smooth = smooth + rng.normal(0, 2.0, size=smooth.shape)
    smooth[20:30, 5:60] = 17
    yield "mixed64", np.clip(np.rint(smooth), 0, 255).astype(np.uint8)

    stripes = np.zeros((32, 40), dtype=np.uint8)
    stripes[:, ::3] = 255
    stripes[::4, :] = 254
    stripes[10:14, 10:30] = 255
    yield "saturated40x32", stripes

    yield "row1x50", rng.integers(100, 140, size=(1, 50), dtype=np.uint8)
    yield "column50x1", rng.integers(0, 256, size=(50, 1), dtype=np.uint8)

    yy, xx = np.mgrid[0:48, 0:48]
    blocks = ((xx // 8 + yy // 8) % 2) * 180 + 30
    blocks[yy == xx] = 0
    yield "blocks48", blocks.astype(np.uint8)


def main():
    for name, img in fixtures():
        write_pgm(HERE / f"{name}.pgm", img)
        (HERE / f"{name}.jls").write_bytes(bytes(imagecodecs.jpegls_encode(img)))
        assert np.array_equal(imagecodecs.jpegls_decode((HERE / f"{name}.jls").read_bytes()), img)
        print(name, img.shape)


if __name__ == "__main__":
    main()
