"""A simulated TPM exposing the two-phase key exchange commands.

Only the key-exchange surface is modelled: key creation, TPM2_EC_Ephemeral
and TPM2_ZGen_2Phase.  A TPM is built in one of two modes.  In original
mode ZGen returns the unhashed Z values, as TPM 2.0 does today; in revised
mode it takes the two party identities and returns the session key, and no
Z value ever leaves the object.

Every command is appended to a trace (one JSON-able record per command)
so harnesses can audit exactly what crossed the TPM boundary.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import json
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable

from tpmke import kdf
from tpmke.group import AvfVariant, GroupParams, Point, avf

DEFAULT_SLOTS = 64


class Scheme(enum.Enum):
    ECDH = "TPM_ALG_ECDH"
    ECMQV = "TPM_ALG_ECMQV"
    SM2 = "TPM_ALG_SM2"

    @classmethod
    def parse(cls, value: str | Scheme) -> Scheme:
        if isinstance(value, Scheme):
            return value
        key = value.upper().replace("-", "").replace("_", "")
        aliases = {
            "ECDH": cls.ECDH, "UM": cls.ECDH, "FULLUM": cls.ECDH, "TPMALGECDH": cls.ECDH,
            "ECMQV": cls.ECMQV, "MQV": cls.ECMQV, "TPMALGECMQV": cls.ECMQV,
            "SM2": cls.SM2, "TPMALGSM2": cls.SM2,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown scheme {value!r}") from None

    @property
    def short(self) -> str:
        return {Scheme.ECDH: "UM", Scheme.ECMQV: "MQV", Scheme.SM2: "SM2"}[self]


class Mode(enum.Enum):
    ORIGINAL = "original"
    REVISED = "revised"


class TpmRc(enum.Enum):
    SCHEME_MISMATCH = "scheme-mismatch"
    OFF_CURVE = "off-curve-point"
    SLOT_CONSUMED = "slot-consumed"
    UNKNOWN_HANDLE = "unknown-handle"
    MODE_MISMATCH = "mode-mismatch"
    UNKNOWN_CURVE = "unknown-curve"
    SLOTS_EXHAUSTED = "slots-exhausted"


class TpmError(Exception):
    def __init__(self, rc: TpmRc, message: str = ""):
        super().__init__(f"{rc.value}: {message}" if message else rc.value)
        self.rc = rc


@dataclass
class TpmKeyEntry:
    handle: int
    scheme: Scheme
    private: int = field(repr=False)
    public: Point
    curve: GroupParams


@dataclass
class EphemeralSlot:
    ctr: int
    used: bool
    public: Point


@dataclass
class TraceRecord:
    seq: int
    command: str
    inputs: dict
    outputs: dict | None
    error: str | None

    def to_dict(self, redact: bool = False) -> dict:
        outputs = self.outputs
        if redact and outputs:
            outputs = {k: _fingerprint(v) if k in ("z1", "z2", "key") and v else v
                       for k, v in outputs.items()}
        return {"seq": self.seq, "command": self.command, "inputs": self.inputs,
                "outputs": outputs, "error": self.error}


def _fingerprint(hexvalue: str) -> str:
    return "sha256:" + hashlib.sha256(bytes.fromhex(hexvalue)).hexdigest()[:16]


def _command(name: str):
    def wrap(method):
        @functools.wraps(method)
        def run(self, *args, **kwargs):
            with self._lock:
                inputs = self._describe_inputs(name, args, kwargs)
                try:
                    result, outputs = method(self, *args, **kwargs)
                except TpmError as exc:
                    self._log(name, inputs, None, exc.rc.value)
                    raise
                self._log(name, inputs, outputs, None)
                return result
        return run
    return wrap


class TpmState:
    """One TPM: key table, ephemeral slot array and command trace.

    ``seed`` fixes every secret the TPM holds (its RNG, the primary seed and
    the KDFa ``Random`` value) so whole traces replay bit-exactly.
    """

    def __init__(self, seed: int | bytes | str, mode: Mode | str = Mode.ORIGINAL,
                 curves: Iterable[GroupParams] | None = None,
                 max_slots: int = DEFAULT_SLOTS):
        if curves is None:
            from tpmke.curves import CURVES
            curves = CURVES.values()
        self.mode = Mode(mode)
        self.curves = {c.name: c for c in curves}
        self.max_slots = max_slots
        self._rng = kdf.seeded_rng(seed, "tpm-rng")
        self._random = kdf.seeded_rng(seed, "tpm-random").randbytes(32)
        self._primary_seed = kdf.seeded_rng(seed, "tpm-primary-seed").randbytes(32)
        self._primary_counter = 0
        self.count = 0
        self._keys: dict[int, TpmKeyEntry] = {}
        self._slots: dict[int, EphemeralSlot] = {}
        self._next_handle = 0x80000000
        self._next_persistent = 0x81000000
        self.trace: list[TraceRecord] = []
        self._lock = threading.RLock()

    @contextmanager
    def exclusive(self):
        """Hold the command lock across a multi-command sequence."""
        with self._lock:
            yield self

    # -- key generation -----------------------------------------------------

    @_command("TPM2_Create")
    def tpm2_create(self, scheme: Scheme | str, curve: GroupParams):
        scheme = Scheme.parse(scheme)
        curve = self._curve(curve)
        a = curve.random_scalar(self._rng)
        entry = self._store(scheme, curve, a, persistent=False)
        return (entry.public, entry.handle), self._key_outputs(entry)

    @_command("TPM2_CreatePrimary")
    def tpm2_create_primary(self, scheme: Scheme | str, curve: GroupParams):
        scheme = Scheme.parse(scheme)
        curve = self._curve(curve)
        a = 0
        while a == 0:
            a = kdf.kdfa(self._primary_seed, self._primary_counter, curve.q, kdf.PRIMARY_LABEL)
            self._primary_counter += 1
        entry = self._store(scheme, curve, a, persistent=True)
        return (entry.public, entry.handle), self._key_outputs(entry)

    def _store(self, scheme, curve, a, persistent):
        if persistent:
            handle, self._next_persistent = self._next_persistent, self._next_persistent + 1
        else:
            handle, self._next_handle = self._next_handle, self._next_handle + 1
        entry = TpmKeyEntry(handle, scheme, a, curve.g ** a, curve)
        self._keys[handle] = entry
        return entry

    def _key_outputs(self, entry):
        return {"public": entry.public.hex(), "handle": f"{entry.handle:#010x}"}

    def public_key(self, handle: int) -> Point:
        return self._entry(handle).public

    def key_scheme(self, handle: int) -> Scheme:
        return self._entry(handle).scheme

    # -- first phase --------------------------------------------------------

    @_command("TPM2_EC_Ephemeral")
    def tpm2_ec_ephemeral(self, curve: GroupParams | None = None):
        curve = self._curve(curve) if curve is not None else next(iter(self.curves.values()))
        active = sum(1 for s in self._slots.values() if s.used)
        if active >= self.max_slots:
            raise TpmError(TpmRc.SLOTS_EXHAUSTED, f"{active} ephemeral keys outstanding")
        x = 0
        while x == 0:
            ctr = self.count
            self.count += 1
            x = self._ephemeral_scalar(ctr, curve)
        X = curve.g ** x
        self._slots[ctr] = EphemeralSlot(ctr, True, X)
        return (X, ctr), {"X": X.hex(), "ctr": ctr}

    def _ephemeral_scalar(self, ctr: int, curve: GroupParams) -> int:
        return kdf.kdfa(self._random, ctr, curve.q)

    # -- second phase -------------------------------------------------------

    @_command("TPM2_ZGen_2Phase")
    def tpm2_zgen_2phase(self, scheme: Scheme | str, key_handle: int, ctr: int,
                         B: Point, Y: Point):
        """Original command: returns (Z1, Z2); Z2 is None except for ECDH."""
        if self.mode is not Mode.ORIGINAL:
            raise TpmError(TpmRc.MODE_MISMATCH, "this TPM runs the revised command set")
        entry, x, X = self._zgen_checks(scheme, key_handle, ctr, B, Y)
        z1, z2 = shared_values(entry.scheme, entry.private, x, X, B, Y)
        self._slots[ctr].used = False
        outputs = {"z1": z1.hex(), "z2": z2.hex() if z2 is not None else None}
        return (z1, z2), outputs

    @_command("TPM2_ZGen_2Phase_Rev")
    def tpm2_zgen_2phase_rev(self, scheme: Scheme | str, key_handle: int, ctr: int,
                             B: Point, Y: Point, id_owner: str, id_peer: str,
                             initiator: bool = True) -> bytes:
        """Revised command: derives and returns only the session key.

        ``initiator`` says whether the owner sent the first message; it fixes
        the order of identities and ephemerals inside the hash.
        """
        if self.mode is not Mode.REVISED:
            raise TpmError(TpmRc.MODE_MISMATCH, "this TPM runs the original command set")
        entry, x, X = self._zgen_checks(scheme, key_handle, ctr, B, Y)
        z1, z2 = shared_values(entry.scheme, entry.private, x, X, B, Y)
        self._slots[ctr].used = False
        if initiator:
            id_a, id_b, X_a, Y_b = id_owner, id_peer, X, Y
        else:
            id_a, id_b, X_a, Y_b = id_peer, id_owner, Y, X
        if entry.scheme is Scheme.ECDH:
            key = kdf.h1(kdf.UMTranscript(z1, z2, id_a, id_b, X_a, Y_b))
        else:
            key = kdf.h2(kdf.ZTranscript(z1, id_a, id_b))
        return key, {"key": key.hex()}

    def _zgen_checks(self, scheme, key_handle, ctr, B, Y):
        entry = self._entry(key_handle)
        scheme = Scheme.parse(scheme)
        if scheme is not entry.scheme:
            raise TpmError(TpmRc.SCHEME_MISMATCH,
                           f"key is {entry.scheme.value}, command asked for {scheme.value}")
        for name, P in (("B", B), ("Y", Y)):
            if not isinstance(P, Point) or P.is_identity or not entry.curve.contains(P):
                raise TpmError(TpmRc.OFF_CURVE, f"{name} is not on {entry.curve.name}")
        slot = self._slots.get(ctr)
        if slot is None or not slot.used:
            raise TpmError(TpmRc.SLOT_CONSUMED, f"ephemeral {ctr} is not available")
        if slot.public.group != entry.curve:
            raise TpmError(TpmRc.OFF_CURVE, "ephemeral was generated on another curve")
        x = self._ephemeral_scalar(ctr, entry.curve)
        return entry, x, slot.public

    # -- helpers ------------------------------------------------------------

    def _entry(self, handle) -> TpmKeyEntry:
        try:
            return self._keys[handle]
        except (KeyError, TypeError):
            raise TpmError(TpmRc.UNKNOWN_HANDLE, f"no key at {handle!r}") from None

    def _curve(self, curve) -> GroupParams:
        name = curve.name if isinstance(curve, GroupParams) else str(curve)
        if name not in self.curves:
            raise TpmError(TpmRc.UNKNOWN_CURVE, name)
        return self.curves[name]

    def _describe_inputs(self, name, args, kwargs) -> dict:
        def enc(v):
            if isinstance(v, Point):
                return v.hex() if v.group.contains(v) else f"invalid:{v.x}:{v.y}"
            if isinstance(v, GroupParams):
                return v.name
            if isinstance(v, enum.Enum):
                return v.value
            return v
        params = {
            "TPM2_Create": ("scheme", "curve"),
            "TPM2_CreatePrimary": ("scheme", "curve"),
            "TPM2_EC_Ephemeral": ("curve",),
            "TPM2_ZGen_2Phase": ("scheme", "keyHandle", "ctr", "B", "Y"),
            "TPM2_ZGen_2Phase_Rev": ("scheme", "keyHandle", "ctr", "B", "Y",
                                     "idOwner", "idPeer", "initiator"),
        }[name]
        out = {k: enc(v) for k, v in zip(params, args)}
        out.update({k: enc(v) for k, v in kwargs.items()})
        for k in ("keyHandle", "key_handle"):
            if isinstance(out.get(k), int):
                out[k] = f"{out[k]:#010x}"
        return out

    def _log(self, name, inputs, outputs, error):
        self.trace.append(TraceRecord(len(self.trace), name, inputs, outputs, error))

    def trace_jsonl(self, redact: bool = True) -> str:
        return "".join(json.dumps(r.to_dict(redact), sort_keys=True) + "\n" for r in self.trace)

    # -- outside the command interface --------------------------------------

    def extract_private(self, handle: int) -> int:
        """Physical-attack model: read a long-term scalar straight out of the chip.

        Not a TPM command and never traced; attacker models that allow
        plaintext corruption of TPM-held keys go through here.
        """
        return self._entry(handle).private

    def audit_secrets(self) -> dict[str, int]:
        """Every private scalar this TPM holds or can recompute, for leak scans."""
        secrets = {f"key:{h:#010x}": e.private for h, e in self._keys.items()}
        for ctr, slot in self._slots.items():
            secrets[f"ephemeral:{ctr}"] = self._ephemeral_scalar(ctr, slot.public.group)
        return secrets


def shared_values(scheme: Scheme, s: int, r: int, R: Point, P: Point, T: Point):
    """(Z1, Z2) from one side's view: own static s, own ephemeral (r, R), peer's (P, T).

    The formulas are role-symmetric, so initiator and responder call this
    the same way and get the same values.  Z2 is None except for ECDH.
    """
    G = R.group
    h, q = G.h, G.q
    if scheme is Scheme.ECDH:
        return P ** s, T ** r
    if scheme is Scheme.ECMQV:
        pol = G.avf_policy(AvfVariant.MQV)
        d, e = avf(R, pol), avf(T, pol)
        return (T * P ** e) ** (h * ((r + d * s) % q)), None
    pol = G.avf_policy(AvfVariant.SM2)
    d, e = avf(R, pol), avf(T, pol)
    return (P * T ** e) ** (h * ((s + d * r) % q)), None


# -- leak scanning ----------------------------------------------------------

LAMBDA_BYTES = 32


def _walk(value):
    if isinstance(value, dict):
        for k, v in value.items():
            yield from ((k2 or k, v2) for k2, v2 in _walk(v))
    elif isinstance(value, (list, tuple)):
        for v in value:
            yield from _walk(v)
    else:
        yield None, value


def scan_responses(records: Iterable[TraceRecord], scalars: Iterable[int],
                   points: Iterable[bytes] = (), scalar_len: int = 32,
                   public: Iterable[bytes] = ()) -> list[str]:
    """Look for secret material in command responses.

    A scalar counts as leaked if a response field carries it as an integer,
    as its fixed-width hex encoding, or contains its 32-byte encoding
    anywhere.  ``points`` are encodings (e.g. internal Z values) that must
    not appear as a substring of any response field.  A field whose bytes
    are exactly one of the ``public`` encodings (recomputed public keys and
    ephemerals) is exempt from the point check: on a tiny group a Z can
    coincide with a published point without anything leaking.
    """
    scalars = set(scalars)
    wide = {s.to_bytes(LAMBDA_BYTES, "big"): s for s in scalars}
    exact = {s.to_bytes(scalar_len, "big").hex(): s for s in scalars}
    points = list(points)
    public = set(public)
    findings = []
    for rec in records:
        if not rec.outputs:
            continue
        for key, value in _walk(rec.outputs):
            if isinstance(value, int) and not isinstance(value, bool):
                if key != "ctr" and value in scalars:
                    findings.append(f"seq {rec.seq}: integer field {key} holds a secret")
                continue
            if not isinstance(value, str):
                continue
            if value in exact:
                findings.append(f"seq {rec.seq}: field {key} is a secret scalar")
            try:
                raw = bytes.fromhex(value)
            except ValueError:
                continue
            for pat in wide:
                if pat in raw:
                    findings.append(f"seq {rec.seq}: field {key} embeds a secret scalar")
            for pat in points:
                if pat in raw and raw not in public:
                    findings.append(f"seq {rec.seq}: field {key} embeds an internal Z")
    return findings
