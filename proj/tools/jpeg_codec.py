#!/usr/bin/env python3
"""JPEG codec for the external-codec baseline (Pillow).

    jpeg_codec.py encode QUALITY WIDTH HEIGHT CHANNELS  < raw > jpeg
    jpeg_codec.py decode WIDTH HEIGHT CHANNELS          < jpeg > raw

Raw images are 8-bit, row-major, channel-interleaved. Exits nonzero when the
input cannot be decoded.
"""
import io
import sys

from PIL import Image


def main(argv):
    mode = argv[1]
    data = sys.stdin.buffer.read()
    if mode == "encode":
        quality, w, h, c = (int(x) for x in argv[2:6])
        img = Image.frombytes("L" if c == 1 else "RGB", (w, h), data)
        out = io.BytesIO()
        img.save(out, format="JPEG", quality=quality, optimize=False, progressive=False)
        sys.stdout.buffer.write(out.getvalue())
        return 0
    if mode == "decode":
        w, h, c = (int(x) for x in argv[2:5])
        img = Image.open(io.BytesIO(data))
        img.load()
        img = img.convert("L" if c == 1 else "RGB")
        if img.size != (w, h):
            return 3
        sys.stdout.buffer.write(img.tobytes())
        return 0
    return 2


if __name__ == "__main__":
    try:
        sys.exit(main(sys.argv))
    except Exception:  # any decode failure is reported through the exit status
        sys.exit(4)
