"""Reference bridge child: echoes each request's pixels back unchanged.

Run as ``python -m evrecon.bridge_echo``. Serves requests until stdin closes.
Exit codes: 0 clean shutdown, 3 protocol violation.
"""

from __future__ import annotations

import struct
import sys

MAGIC = b"EVDN"


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if chunk == b"":
            return b"".join(chunks)
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def serve(stdin, stdout) -> int:
    while True:
        header = _read_exact(stdin, 16)
        if header == b"":
            return 0
        if len(header) < 16 or header[:4] != MAGIC:
            return 3
        width, height, _sigma = struct.unpack("<IIf", header[4:16])
        body = _read_exact(stdin, width * height * 4)
        if len(body) != width * height * 4:
            return 3
        stdout.write(MAGIC + struct.pack("<II", width, height) + body)
        stdout.flush()


def main() -> int:
    return serve(sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    sys.exit(main())
