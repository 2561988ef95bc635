"""Little-endian binary primitives shared by the embedding and checkpoint formats."""

import struct
from typing import BinaryIO

from .errors import CorruptionError, ValidationError


def read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CorruptionError(f"truncated while reading {what}", offset=f.tell() - len(data))
    return data


def write_u16(f: BinaryIO, value: int) -> None:
    f.write(struct.pack("<H", value))


def write_u32(f: BinaryIO, value: int) -> None:
    f.write(struct.pack("<I", value))


def write_u64(f: BinaryIO, value: int) -> None:
    f.write(struct.pack("<Q", value))


def write_f64(f: BinaryIO, value: float) -> None:
    f.write(struct.pack("<d", value))


def write_str(f: BinaryIO, text: str) -> None:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError(f"string too long for u16 length prefix ({len(raw)} bytes)")
    write_u16(f, len(raw))
    f.write(raw)


def read_u16(f: BinaryIO, what: str) -> int:
    return struct.unpack("<H", read_exact(f, 2, what))[0]


def read_u32(f: BinaryIO, what: str) -> int:
    return struct.unpack("<I", read_exact(f, 4, what))[0]


def read_u64(f: BinaryIO, what: str) -> int:
    return struct.unpack("<Q", read_exact(f, 8, what))[0]


def read_f64(f: BinaryIO, what: str) -> float:
    return struct.unpack("<d", read_exact(f, 8, what))[0]


def read_str(f: BinaryIO, what: str) -> str:
    length = read_u16(f, f"{what} length")
    raw = read_exact(f, length, what)
    return raw.decode("utf-8")
