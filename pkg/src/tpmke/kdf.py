"""Session-key hashes, the TPM ephemeral KDF, and seeded randomness.

H1 and H2 are SHA-256 over a tagged, length-prefixed field encoding, so a
UM transcript can never collide with an MQV/SM2 transcript and no two
field tuples share an encoding.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import random
import struct
from dataclasses import dataclass
from pathlib import Path

from tpmke.group import GroupParams, Point

KEY_BITS = 256
KEY_BYTES = KEY_BITS // 8

TAG_H1 = 0x01
TAG_H2 = 0x02

EPHEMERAL_LABEL = b"tpmke-ephem"
PRIMARY_LABEL = b"tpmke-primary"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class UMTranscript:
    """Input to H1: (Z1, Z2, initiator id, responder id, X, Y)."""

    z1: Point
    z2: Point
    id_a: str
    id_b: str
    x: Point
    y: Point

    def fields(self) -> list[bytes]:
        return [bytes(self.z1), bytes(self.z2), _id(self.id_a), _id(self.id_b),
                bytes(self.x), bytes(self.y)]


@dataclass(frozen=True)
class ZTranscript:
    """Input to H2: (Z, initiator id, responder id)."""

    z: Point
    id_a: str
    id_b: str

    def fields(self) -> list[bytes]:
        return [bytes(self.z), _id(self.id_a), _id(self.id_b)]


def _id(party: str) -> bytes:
    return party.encode("utf-8")


def encode_fields(tag: int, fields: list[bytes]) -> bytes:
    out = bytearray([tag])
    for f in fields:
        out += struct.pack(">I", len(f))
        out += f
    return bytes(out)


def decode_fields(data: bytes) -> tuple[int, list[bytes]]:
    if not data:
        raise EncodingError("empty encoding")
    tag, pos, fields = data[0], 1, []
    while pos < len(data):
        if pos + 4 > len(data):
            raise EncodingError("truncated length prefix")
        (n,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise EncodingError("truncated field")
        fields.append(data[pos:pos + n])
        pos += n
    return tag, fields


def encode_transcript(t: UMTranscript | ZTranscript) -> bytes:
    if isinstance(t, UMTranscript):
        return encode_fields(TAG_H1, t.fields())
    if isinstance(t, ZTranscript):
        return encode_fields(TAG_H2, t.fields())
    raise TypeError(f"not a transcript: {type(t).__name__}")


def h1(t: UMTranscript) -> bytes:
    if not isinstance(t, UMTranscript):
        raise TypeError("h1 takes a UM transcript")
    return hashlib.sha256(encode_transcript(t)).digest()


def h2(t: ZTranscript) -> bytes:
    if not isinstance(t, ZTranscript):
        raise TypeError("h2 takes a (Z, id, id) transcript")
    return hashlib.sha256(encode_transcript(t)).digest()


def kdfa_bytes(key: bytes, label: bytes, context: bytes, nbits: int) -> bytes:
    """Counter-mode HMAC-SHA256 KDF in the TPM KDFa layout.

    Block i is HMAC(key, [i]_32 || label || 00 || context || [nbits]_32).
    """
    out = bytearray()
    i = 1
    while len(out) * 8 < nbits:
        msg = struct.pack(">I", i) + label + b"\x00" + context + struct.pack(">I", nbits)
        out += hmac.new(key, msg, hashlib.sha256).digest()
        i += 1
    nbytes = (nbits + 7) // 8
    return bytes(out[:nbytes])


def kdfa(random_seed: bytes, count: int, q: int, label: bytes = EPHEMERAL_LABEL) -> int:
    """Scalar KDFa(Random, Count) mod q.

    64 extra bits are drawn before reduction so the result is close to
    uniform on [0, q-1].
    """
    nbits = 8 * ((q.bit_length() + 7) // 8) + 64
    raw = kdfa_bytes(random_seed, label, struct.pack(">Q", count), nbits)
    return int.from_bytes(raw, "big") % q


def seeded_rng(seed: int | bytes | str, *labels: str) -> random.Random:
    """An independent deterministic stream for (seed, labels)."""
    h = hashlib.sha256(repr(seed).encode())
    for label in labels:
        h.update(b"\x00" + label.encode())
    return random.Random(int.from_bytes(h.digest(), "big"))


def make_test_vectors(group: GroupParams) -> dict:
    """Hex vectors for H1, H2 and KDFa on fixed inputs over ``group``."""
    g = group.g
    X, Y, Z1, Z2 = g ** 3, g ** 5, g ** 7, g ** 11
    um = UMTranscript(Z1, Z2, "alice", "bob", X, Y)
    zt = ZTranscript(Z1, "alice", "bob")
    seed = bytes(range(32))
    return {
        "curve": group.name,
        "h1": [{
            "z1": Z1.hex(), "z2": Z2.hex(), "id_a": "alice", "id_b": "bob",
            "x": X.hex(), "y": Y.hex(),
            "encoding": encode_transcript(um).hex(), "key": h1(um).hex(),
        }],
        "h2": [{
            "z": Z1.hex(), "id_a": "alice", "id_b": "bob",
            "encoding": encode_transcript(zt).hex(), "key": h2(zt).hex(),
        }],
        "kdfa": [
            {"random": seed.hex(), "count": c, "label": EPHEMERAL_LABEL.decode(),
             "q": hex(group.q), "scalar": hex(kdfa(seed, c, group.q))}
            for c in (0, 1, 7, 8)
        ],
    }


def emit_test_vectors(path: str | Path, groups: list[GroupParams]) -> None:
    data = {"version": 1, "vectors": [make_test_vectors(g) for g in groups]}
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
