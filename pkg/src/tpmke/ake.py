"""Host-side session drivers for UM, MQV and SM2.

A party is backed either by a TPM (original or revised command set) or by
plain software holding its scalars in host memory.  Sessions are named by
the quintuple (sc, owner, peer, Out, In).  The initiator's identity and
ephemeral always come first inside the session-key hash, whichever side
computes it.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from tpmke import kdf
from tpmke.group import GroupParams, Point
from tpmke.tpm import Mode, Scheme, TpmError, TpmState, shared_values


class Backing(enum.Enum):
    TPM_ORIGINAL = "tpm-original"
    TPM_REVISED = "tpm-revised"
    SOFTWARE = "software"
    # a public key registered by the attacker; it never runs activations
    EXTERNAL = "external"

    @property
    def is_tpm(self) -> bool:
        return self in (Backing.TPM_ORIGINAL, Backing.TPM_REVISED)


class Role(enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class Status(enum.Enum):
    OPEN = "open"
    COMPLETED = "completed"


class AkeError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


@dataclass
class LongTermKey:
    scheme: Scheme
    public: Point
    handle: int | None = None
    private: int | None = field(default=None, repr=False)


@dataclass
class PartyConfig:
    id: str
    backing: Backing
    keys: dict[Scheme, LongTermKey]
    tpm: TpmState | None = field(default=None, repr=False)
    corrupted: bool = False

    @property
    def schemes(self) -> frozenset[Scheme]:
        return frozenset(self.keys)

    def public_key(self, scheme: Scheme) -> Point:
        try:
            return self.keys[scheme].public
        except KeyError:
            raise AkeError("scheme-mismatch", f"{self.id} has no {scheme.short} key") from None


Party = PartyConfig


@dataclass(eq=False)
class SessionRecord:
    sid: int
    sc: Scheme
    owner: str
    peer: str
    out: Point
    inp: Point | None
    role: Role
    ctr: int | None = None
    ephemeral: int | None = field(default=None, repr=False)
    status: Status = Status.OPEN
    key: bytes | None = field(default=None, repr=False)
    revealable: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def identifier(self) -> tuple:
        return (self.sc, self.owner, self.peer, self.out, self.inp)

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED

    def describe(self) -> dict:
        return {
            "sid": self.sid, "sc": self.sc.short, "owner": self.owner, "peer": self.peer,
            "out": self.out.hex(), "in": self.inp.hex() if self.inp is not None else None,
            "role": self.role.value, "status": self.status.value,
        }


def matching(s1: SessionRecord, s2: SessionRecord) -> bool:
    """s2 = (sc, B, A, Y, X) for s1 = (sc, A, B, X, Y)."""
    if s1.inp is None or s2.inp is None:
        return False
    return (s1.sc is s2.sc and s1.owner == s2.peer and s1.peer == s2.owner
            and s1.out == s2.inp and s1.inp == s2.out)


def message_matching(s1: SessionRecord, s2: SessionRecord) -> bool:
    """Mirrored transcripts under different schemes."""
    if s1.inp is None or s2.inp is None:
        return False
    return (s1.sc is not s2.sc and s1.owner == s2.peer and s1.peer == s2.owner
            and s1.out == s2.inp and s1.inp == s2.out)


def key_fingerprint(key: bytes) -> str:
    return hashlib.sha256(key).hexdigest()[:16]


class Environment:
    """Party registry, session table and transcript for one simulated network.

    All parties live on one curve.  Each TPM-backed party gets its own TPM
    whose seed is derived from the environment seed and the party id.
    """

    def __init__(self, curve: GroupParams, seed: int | str):
        self.curve = curve
        self.seed = seed
        self.parties: dict[str, PartyConfig] = {}
        self.sessions: list[SessionRecord] = []
        self.events: list[dict] = []
        self._rng = kdf.seeded_rng(seed, "environment")

    # -- parties ------------------------------------------------------------

    def add_party(self, pid: str, backing: Backing | str,
                  schemes: Iterable[Scheme | str] = tuple(Scheme),
                  primary: bool = False) -> PartyConfig:
        backing = Backing(backing)
        if backing is Backing.EXTERNAL:
            raise AkeError("bad-backing", "external parties are registered, not created")
        self._fresh_id(pid)
        keys: dict[Scheme, LongTermKey] = {}
        tpm = None
        if backing.is_tpm:
            mode = Mode.ORIGINAL if backing is Backing.TPM_ORIGINAL else Mode.REVISED
            tpm = TpmState(seed=(self.seed, "tpm", pid), mode=mode, curves=[self.curve])
            create = tpm.tpm2_create_primary if primary else tpm.tpm2_create
            for sc in map(Scheme.parse, schemes):
                public, handle = create(sc, self.curve)
                keys[sc] = LongTermKey(sc, public, handle=handle)
        else:
            rng = kdf.seeded_rng(self.seed, "software-key", pid)
            for sc in map(Scheme.parse, schemes):
                a = self.curve.random_scalar(rng)
                keys[sc] = LongTermKey(sc, self.curve.g ** a, private=a)
        party = PartyConfig(pid, backing, keys, tpm)
        self.parties[pid] = party
        self._log("add-party", party=pid, backing=backing.value,
                  keys={sc.short: k.public.hex() for sc, k in keys.items()})
        return party

    def register_public_key(self, pid: str, public: Point, scheme: Scheme | str) -> PartyConfig:
        """Bind a public key to an identity with no proof of possession."""
        scheme = Scheme.parse(scheme)
        self._check_point(public, "public key")
        party = self.parties.get(pid)
        if party is None:
            self._fresh_id(pid)
            party = PartyConfig(pid, Backing.EXTERNAL, {}, corrupted=True)
            self.parties[pid] = party
        elif party.backing is not Backing.EXTERNAL:
            raise AkeError("duplicate-party", pid)
        party.keys[scheme] = LongTermKey(scheme, public)
        self._log("register", party=pid, scheme=scheme.short, key=public.hex())
        return party

    def party(self, pid: str) -> PartyConfig:
        try:
            return self.parties[pid]
        except KeyError:
            raise AkeError("unknown-party", pid) from None

    def _fresh_id(self, pid: str):
        if pid in self.parties:
            raise AkeError("duplicate-party", pid)

    # -- activations --------------------------------------------------------

    def initiate(self, sc: Scheme | str, owner: str, peer: str) -> tuple[Point, SessionRecord]:
        sc = Scheme.parse(sc)
        me = self._active(owner, sc)
        self.party(peer).public_key(sc)
        ctr, x, X = self._ephemeral(me)
        s = SessionRecord(len(self.sessions), sc, owner, peer, X, None, Role.INITIATOR,
                          ctr=ctr, ephemeral=x)
        if x is not None:
            s.revealable["ephemeral"] = x
        self.sessions.append(s)
        self._log("initiate", **s.describe())
        return X, s

    def respond(self, sc: Scheme | str, owner: str, peer: str, X: Point) -> tuple[Point, SessionRecord]:
        sc = Scheme.parse(sc)
        me = self._active(owner, sc)
        P = self.party(peer).public_key(sc)
        self._check_point(X, "X")
        ctr, y, Y = self._ephemeral(me)
        s = SessionRecord(len(self.sessions), sc, owner, peer, Y, X, Role.RESPONDER,
                          ctr=ctr, ephemeral=y)
        if y is not None:
            s.revealable["ephemeral"] = y
        self._derive(me, s, P)
        self.sessions.append(s)
        self._log("respond", **s.describe(), key=key_fingerprint(s.key))
        return Y, s

    def complete(self, sc: Scheme | str, owner: str, peer: str, X: Point, Y: Point) -> SessionRecord:
        sc = Scheme.parse(sc)
        me = self._active(owner, sc)
        s = next((t for t in self.sessions
                  if t.status is Status.OPEN and t.role is Role.INITIATOR and t.sc is sc
                  and t.owner == owner and t.peer == peer and t.out == X), None)
        if s is None:
            raise AkeError("no-open-session", f"{owner} has no open {sc.short} session to {peer}")
        self._check_point(Y, "Y")
        s.inp = Y
        self._derive(me, s, self.party(peer).public_key(sc))
        self._log("complete", **s.describe(), key=key_fingerprint(s.key))
        return s

    def _active(self, pid: str, sc: Scheme) -> PartyConfig:
        party = self.party(pid)
        if party.backing is Backing.EXTERNAL:
            raise AkeError("not-honest", f"{pid} is attacker-registered")
        if sc not in party.keys:
            raise AkeError("scheme-mismatch", f"{pid} has no {sc.short} key")
        return party

    def _check_point(self, P: Point, what: str):
        if not isinstance(P, Point) or P.is_identity or not self.curve.contains(P):
            raise AkeError("off-curve", f"{what} is not a point of {self.curve.name}")

    def _ephemeral(self, party: PartyConfig):
        if party.tpm is not None:
            try:
                X, ctr = party.tpm.tpm2_ec_ephemeral(self.curve)
            except TpmError as exc:
                raise AkeError("tpm-error", str(exc)) from exc
            return ctr, None, X
        x = self.curve.random_scalar(self._rng)
        return None, x, self.curve.g ** x

    def _derive(self, me: PartyConfig, s: SessionRecord, P: Point):
        key = me.keys[s.sc]
        initiator = s.role is Role.INITIATOR
        T = s.inp
        id_a, id_b = (s.owner, s.peer) if initiator else (s.peer, s.owner)
        X_a, Y_b = (s.out, T) if initiator else (T, s.out)
        try:
            if me.backing is Backing.TPM_REVISED:
                s.key = me.tpm.tpm2_zgen_2phase_rev(s.sc, key.handle, s.ctr, P, T,
                                                    s.owner, s.peer, initiator)
            elif me.backing is Backing.TPM_ORIGINAL and s.sc is Scheme.ECDH:
                s.key = oracle_ec(me.tpm, key.handle, s.ctr, P, T, id_a, id_b, X_a, Y_b)
            elif me.backing is Backing.TPM_ORIGINAL:
                z, _ = me.tpm.tpm2_zgen_2phase(s.sc, key.handle, s.ctr, P, T)
                s.revealable["z"] = z
                s.key = kdf.h2(kdf.ZTranscript(z, id_a, id_b))
            else:
                z1, z2 = shared_values(s.sc, key.private, s.ephemeral, s.out, P, T)
                if s.sc is Scheme.ECDH:
                    s.revealable.update(z1=z1, z2=z2)
                    s.key = kdf.h1(kdf.UMTranscript(z1, z2, id_a, id_b, X_a, Y_b))
                else:
                    s.revealable["z"] = z1
                    s.key = kdf.h2(kdf.ZTranscript(z1, id_a, id_b))
        except TpmError as exc:
            raise AkeError("tpm-error", str(exc)) from exc
        s.revealable["key"] = s.key
        s.status = Status.COMPLETED

    # -- inspection ---------------------------------------------------------

    def find(self, owner: str, sc: Scheme | str | None = None, **match) -> list[SessionRecord]:
        sc = Scheme.parse(sc) if sc is not None else None
        found = [s for s in self.sessions if s.owner == owner and (sc is None or s.sc is sc)]
        for k, v in match.items():
            found = [s for s in found if getattr(s, k) == v]
        return found

    def matching_session(self, s: SessionRecord) -> SessionRecord | None:
        return next((t for t in self.sessions if t is not s and matching(s, t)), None)

    def _log(self, event: str, **data):
        self.events.append({"seq": len(self.events), "event": event, **data})

    def transcript_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


def oracle_ec(tpm: TpmState, handle: int, ctr: int, B: Point, Y: Point,
              id_a: str, id_b: str, X_a: Point, Y_b: Point) -> bytes:
    """Key-returning wrapper over ECDH ZGen: hashes (Z1, Z2) at once and drops them.

    This is how original-mode UM hosts are modelled: the host never keeps
    the unhashed values, so they are not part of any revealable state.
    """
    z1, z2 = tpm.tpm2_zgen_2phase(Scheme.ECDH, handle, ctr, B, Y)
    return kdf.h1(kdf.UMTranscript(z1, z2, id_a, id_b, X_a, Y_b))


def handshake(env: Environment, sc: Scheme | str, initiator: str, responder: str):
    """One honest run; returns the initiator's and responder's sessions."""
    X, s_a = env.initiate(sc, initiator, responder)
    Y, s_b = env.respond(sc, responder, initiator, X)
    env.complete(sc, initiator, responder, X, Y)
    return s_a, s_b


# -- scenario files ---------------------------------------------------------

BUILTIN_SCENARIOS: dict[str, dict] = {
    "um-handshake": {
        "curve": "toy",
        "parties": [{"id": "alice", "backing": "tpm-original", "schemes": ["UM"]},
                    {"id": "bob", "backing": "tpm-original", "schemes": ["UM"]}],
        "script": [{"op": "handshake", "scheme": "UM", "initiator": "alice", "responder": "bob"}],
    },
    "mqv-handshake": {
        "curve": "toy",
        "parties": [{"id": "alice", "backing": "tpm-original", "schemes": ["MQV"]},
                    {"id": "bob", "backing": "tpm-original", "schemes": ["MQV"]}],
        "script": [{"op": "handshake", "scheme": "MQV", "initiator": "alice", "responder": "bob"}],
    },
    "sm2-handshake": {
        "curve": "toy",
        "parties": [{"id": "alice", "backing": "tpm-revised", "schemes": ["SM2"]},
                    {"id": "bob", "backing": "tpm-revised", "schemes": ["SM2"]}],
        "script": [{"op": "handshake", "scheme": "SM2", "initiator": "alice", "responder": "bob"}],
    },
    "mixed-backing": {
        "curve": "toy",
        "parties": [{"id": "alice", "backing": "tpm-revised", "schemes": ["UM", "MQV", "SM2"]},
                    {"id": "bob", "backing": "software", "schemes": ["UM", "MQV", "SM2"]}],
        "script": [
            {"op": "handshake", "scheme": "UM", "initiator": "alice", "responder": "bob"},
            {"op": "handshake", "scheme": "MQV", "initiator": "bob", "responder": "alice"},
            {"op": "handshake", "scheme": "SM2", "initiator": "alice", "responder": "bob"},
        ],
    },
}


def run_scenario(scenario: dict, seed: int | str, curves: dict[str, GroupParams] | None = None):
    """Execute a validated scenario; returns (environment, list of session pairs)."""
    if curves is None:
        from tpmke.curves import CURVES as curves
    curve = curves[scenario.get("curve", "toy")]
    env = Environment(curve, seed)
    for p in scenario["parties"]:
        env.add_party(p["id"], p["backing"], p.get("schemes", ["UM", "MQV", "SM2"]),
                      primary=p.get("primary", False))
    pairs = []
    for step in scenario["script"]:
        pairs.append(handshake(env, step["scheme"], step["initiator"], step["responder"]))
    return env, pairs
