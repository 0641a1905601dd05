"""Attacker harness: model queries plus scripted attacks.

Each attack builds a fresh environment under a deployment profile, drives
the honest parties through the network it controls and then tries to
compute a session key it should not know.  Blocking is never decided up
front: an attack stops only when a query it needs actually fails or
returns nothing useful, and the report records which one.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable

from tpmke import kdf
from tpmke.ake import (AkeError, Backing, Environment, PartyConfig, SessionRecord,
                       Status, handshake, matching)
from tpmke.curves import P256, TOY
from tpmke.group import AvfVariant, GroupParams, Point, avf, mock_fixed_lsb_group
from tpmke.tpm import Mode, Scheme, TpmState

MQV, SM2, UM = Scheme.ECMQV, Scheme.SM2, Scheme.ECDH

# the fixed-LSB mock used for the representation attack: 8 pinned bits
MOCK = mock_fixed_lsb_group(8, 0x5A)


class Profile(enum.Enum):
    KE_STRICT = "tpm.KE-strict"
    KE = "tpm.KE"
    REV_STRICT = "tpm.KE.rev-strict"
    REV = "tpm.KE.rev"
    SOFTWARE = "software-mixed"

    @property
    def honest_backing(self) -> Backing:
        if self in (Profile.KE_STRICT, Profile.KE):
            return Backing.TPM_ORIGINAL
        if self in (Profile.REV_STRICT, Profile.REV):
            return Backing.TPM_REVISED
        return Backing.SOFTWARE

    @property
    def allows_registration(self) -> bool:
        return self not in (Profile.KE_STRICT, Profile.REV_STRICT)


PROFILES = list(Profile)


class Query(enum.Enum):
    STATE_REVEAL = "SessionStateReveal"
    KEY_REVEAL = "SessionKeyReveal"
    CORRUPTION = "Corruption"
    ESTABLISH = "EstablishParty"
    TEST = "Test"


class AdversaryError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


class BlackBox:
    """Command access to a corrupted party's TPM, without its private keys."""

    def __init__(self, party: PartyConfig):
        self._party = party
        self._tpm: TpmState = party.tpm

    @property
    def mode(self) -> Mode:
        return self._tpm.mode

    def public_key(self, scheme: Scheme) -> Point:
        return self._party.public_key(scheme)

    def ephemeral(self):
        return self._tpm.tpm2_ec_ephemeral(self._tpm_curve())

    def oracle_ec(self, ctr, B, Y, id_a, id_b, X_a, Y_b) -> bytes:
        from tpmke.ake import oracle_ec
        self._require(Mode.ORIGINAL)
        return oracle_ec(self._tpm, self._handle(UM), ctr, B, Y, id_a, id_b, X_a, Y_b)

    def oracle_z(self, scheme: Scheme, ctr, B, Y) -> Point:
        """O^MQV / O^SM2: the unhashed Z from the original command."""
        scheme = Scheme.parse(scheme)
        self._require(Mode.ORIGINAL)
        if scheme is UM:
            raise AdversaryError("unsupported", "UM goes through the key-returning oracle")
        z, _ = self._tpm.tpm2_zgen_2phase(scheme, self._handle(scheme), ctr, B, Y)
        return z

    def derive_key(self, scheme, ctr, B, Y, id_owner, id_peer, initiator=True) -> bytes:
        self._require(Mode.REVISED)
        scheme = Scheme.parse(scheme)
        return self._tpm.tpm2_zgen_2phase_rev(scheme, self._handle(scheme), ctr, B, Y,
                                              id_owner, id_peer, initiator)

    def _tpm_curve(self):
        return next(iter(self._tpm.curves.values()))

    def _handle(self, scheme):
        return self._party.keys[scheme].handle

    def _require(self, mode):
        if self._tpm.mode is not mode:
            raise AdversaryError("unsupported", f"TPM runs the {self._tpm.mode.value} command set")


@dataclass
class Corruption:
    party: str
    private: dict[Scheme, int] | None = field(default=None, repr=False)
    blackbox: BlackBox | None = None


@dataclass
class AttackReport:
    attack: str
    profile: Profile
    curve: str
    succeeded: bool
    reason: str
    evidence: dict
    transcript_digest: str

    @property
    def cell(self) -> str:
        if self.succeeded:
            return "success"
        prefix = "failed" if self.reason == "keys-differ" else "blocked"
        return f"{prefix}:{self.reason}"

    def to_dict(self) -> dict:
        return {"attack": self.attack, "profile": self.profile.value, "curve": self.curve,
                "succeeded": self.succeeded, "reason": self.reason, "cell": self.cell,
                "evidence": self.evidence, "transcript_digest": self.transcript_digest}


class AttackerEnv:
    """The adversary's view of one environment under one deployment profile."""

    def __init__(self, profile: Profile | str, curve: GroupParams = TOY, seed: int | str = 0):
        self.profile = Profile(profile)
        self.env = Environment(curve, (seed, "env", self.profile.value))
        self.rng = kdf.seeded_rng(seed, "attacker", self.profile.value)
        self._coin_rng = kdf.seeded_rng(seed, "test-coin", self.profile.value)
        self.allowed = set(Query)
        if not self.profile.allows_registration:
            self.allowed.discard(Query.ESTABLISH)
        self.state_revealed: set[int] = set()
        self.key_revealed: set[int] = set()
        self.queries: list[dict] = []
        self.test_session: SessionRecord | None = None
        self._coin: int | None = None
        self.revealed_coin: int | None = None

    @property
    def curve(self) -> GroupParams:
        return self.env.curve

    # -- network control ----------------------------------------------------

    def honest_party(self, pid: str, schemes) -> PartyConfig:
        return self.env.add_party(pid, self.profile.honest_backing, schemes)

    def initiate(self, sc, owner, peer):
        return self.env.initiate(sc, owner, peer)

    def respond(self, sc, owner, peer, X):
        return self.env.respond(sc, owner, peer, X)

    def complete(self, sc, owner, peer, X, Y):
        return self.env.complete(sc, owner, peer, X, Y)

    def random_scalar(self) -> int:
        return self.curve.random_scalar(self.rng)

    # -- queries ------------------------------------------------------------

    def session_state_reveal(self, s: SessionRecord) -> dict:
        self._permit(Query.STATE_REVEAL)
        self._guard_test(s)
        self.state_revealed.add(s.sid)
        self._note(Query.STATE_REVEAL, sid=s.sid)
        return dict(s.revealable)

    def session_key_reveal(self, s: SessionRecord) -> bytes:
        self._permit(Query.KEY_REVEAL)
        self._guard_test(s)
        if s.status is not Status.COMPLETED:
            raise AdversaryError("incomplete-session", f"session {s.sid} has no key yet")
        self.key_revealed.add(s.sid)
        self._note(Query.KEY_REVEAL, sid=s.sid)
        return s.key

    def corrupt(self, pid: str) -> Corruption:
        self._permit(Query.CORRUPTION)
        party = self.env.party(pid)
        party.corrupted = True
        self._note(Query.CORRUPTION, party=pid)
        if party.backing is Backing.SOFTWARE:
            return Corruption(pid, private={sc: k.private for sc, k in party.keys.items()})
        if party.backing is Backing.TPM_REVISED:
            # the revised deployment model admits physical extraction
            return Corruption(pid, private={sc: party.tpm.extract_private(k.handle)
                                            for sc, k in party.keys.items()},
                              blackbox=BlackBox(party))
        if party.backing is Backing.TPM_ORIGINAL:
            return Corruption(pid, blackbox=BlackBox(party))
        return Corruption(pid)

    def establish_party(self, pid: str, public: Point, scheme) -> PartyConfig:
        self._permit(Query.ESTABLISH)
        try:
            party = self.env.register_public_key(pid, public, scheme)
        except AkeError as exc:
            raise AdversaryError(exc.code, str(exc)) from exc
        self._note(Query.ESTABLISH, party=pid)
        return party

    def is_clean(self, s: SessionRecord) -> bool:
        if s.status is not Status.COMPLETED:
            return False
        if s.sid in self.state_revealed or s.sid in self.key_revealed:
            return False
        if self.env.party(s.owner).corrupted or self.env.party(s.peer).corrupted:
            return False
        partner = self.env.matching_session(s)
        if partner is not None and (partner.sid in self.state_revealed
                                    or partner.sid in self.key_revealed):
            return False
        return True

    def test_query(self, s: SessionRecord) -> bytes:
        self._permit(Query.TEST)
        if self.test_session is not None:
            raise AdversaryError("test-already-asked")
        if not self.is_clean(s):
            raise AdversaryError("not-clean", f"session {s.sid} is exposed or incomplete")
        self.test_session = s
        self._coin = self._coin_rng.getrandbits(1)
        self._note(Query.TEST, sid=s.sid)
        if self._coin == 1:
            return s.key
        return self._coin_rng.randbytes(kdf.KEY_BYTES)

    def adjudicate(self, guess: int) -> bool:
        """Reveal the hidden coin and say whether ``guess`` matched it."""
        if self._coin is None:
            raise AdversaryError("no-test", "no Test query was asked")
        self.revealed_coin = self._coin
        return guess == self._coin

    def _guard_test(self, s: SessionRecord):
        t = self.test_session
        if t is not None and (s is t or matching(s, t)):
            raise AdversaryError("forbidden-target", f"session {s.sid} is the test session or its partner")

    def _permit(self, q: Query):
        if q not in self.allowed:
            raise AdversaryError("profile-forbidden", f"{q.value} is not allowed under {self.profile.value}")

    def _note(self, q: Query, **data):
        self.queries.append({"query": q.value, **data})

    # -- reporting ----------------------------------------------------------

    def digest(self) -> str:
        blob = self.env.transcript_jsonl() + json.dumps(self.queries, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def blocked(self, attack: str, reason: str, **evidence) -> AttackReport:
        return AttackReport(attack, self.profile, self.curve.name, False, reason,
                            _jsonable(evidence), self.digest())

    def verdict(self, attack: str, attacker_key: bytes, victim: SessionRecord,
                related: list[SessionRecord] = (), **evidence) -> AttackReport:
        """Compare the attacker's key with the key the victim's own code derived."""
        ok = attacker_key == victim.key
        partner = self.env.matching_session(victim)
        evidence.update(
            attacker_key=attacker_key.hex(),
            victim_key=victim.key.hex(),
            victim_session=victim.describe(),
            victim_has_matching_session=partner is not None,
            related_sessions=[r.describe() for r in related],
            related_match_victim=[matching(r, victim) for r in related],
        )
        return AttackReport(attack, self.profile, self.curve.name, ok,
                            "success" if ok else "keys-differ", _jsonable(evidence), self.digest())


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Point):
        return value.hex()
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, enum.Enum):
        return value.value
    return value


def _pol(G: GroupParams, scheme: Scheme):
    return G.avf_policy(AvfVariant.MQV if scheme is MQV else AvfVariant.SM2)


# -- attacks ----------------------------------------------------------------

def attack_kaliski_uks(adv: AttackerEnv) -> AttackReport:
    """Register C = g^c so that X'C^e = XA^d, then reuse B's Z for A's key."""
    name = "kaliski-uks"
    G = adv.curve
    pol = _pol(G, MQV)
    A = adv.honest_party("A", [MQV]).public_key(MQV)
    adv.honest_party("B", [MQV])
    X, s_a = adv.initiate(MQV, "A", "B")
    d = avf(X, pol)
    while True:
        u = adv.random_scalar()
        Xp = X * A ** d / G.g ** u
        if not Xp.is_identity:
            break
    e = avf(Xp, pol)
    c = u * pow(e, -1, G.q) % G.q
    C = G.g ** c
    identity_holds = Xp * C ** e == X * A ** d
    try:
        adv.establish_party("M", C, MQV)
    except AdversaryError as exc:
        return adv.blocked(name, "registration-blocked", error=exc.code, identity_holds=identity_holds)
    Y, s_b = adv.respond(MQV, "B", "M", Xp)
    adv.complete(MQV, "A", "B", X, Y)
    state = adv.session_state_reveal(s_b)
    if "z" not in state:
        return adv.blocked(name, "Z-unavailable", revealed=sorted(state), identity_holds=identity_holds)
    key = kdf.h2(kdf.ZTranscript(state["z"], "A", "B"))
    return adv.verdict(name, key, s_a, [s_b], identity_holds=identity_holds)


def attack_xu1(adv: AttackerEnv) -> AttackReport:
    """Register M = A g^u; strip g^u's contribution from B's Z."""
    name = "xu-1"
    G = adv.curve
    pol = _pol(G, SM2)
    A = adv.honest_party("A", [SM2]).public_key(SM2)
    B = adv.honest_party("B", [SM2]).public_key(SM2)
    X, s_a = adv.initiate(SM2, "A", "B")
    u = adv.random_scalar()
    try:
        adv.establish_party("M", A * G.g ** u, SM2)
    except AdversaryError as exc:
        return adv.blocked(name, "registration-blocked", error=exc.code)
    Y, s_b = adv.respond(SM2, "B", "M", X)
    adv.complete(SM2, "A", "B", X, Y)
    state = adv.session_state_reveal(s_b)
    if "z" not in state:
        return adv.blocked(name, "Z-unavailable", revealed=sorted(state))
    e = avf(Y, pol)
    z_a = state["z"] / (B * Y ** e) ** (G.h * u)
    key = kdf.h2(kdf.ZTranscript(z_a, "A", "B"))
    return adv.verdict(name, key, s_a, [s_b], recovered_z=z_a)


def attack_xu2(adv: AttackerEnv) -> AttackReport:
    """Send X' = A X^d under a key M = g^m the attacker legitimately knows."""
    name = "xu-2"
    G = adv.curve
    pol = _pol(G, SM2)
    A = adv.honest_party("A", [SM2]).public_key(SM2)
    B = adv.honest_party("B", [SM2]).public_key(SM2)
    X, s_a = adv.initiate(SM2, "A", "B")
    try:
        m = adv.random_scalar()
        adv.establish_party("M", G.g ** m, SM2)
        key_source = "registered"
    except AdversaryError:
        # no registration: the attacker's own identity has a TPM-generated key
        adv.honest_party("M", [SM2])
        corr = adv.corrupt("M")
        if corr.private is None:
            return adv.blocked(name, "plaintext-unavailable", key_source="tpm")
        m = corr.private[SM2]
        key_source = "extracted"
    d = avf(X, pol)
    Xp = A * X ** d
    dp = avf(Xp, pol)
    Y, s_b = adv.respond(SM2, "B", "M", Xp)
    adv.complete(SM2, "A", "B", X, Y)
    state = adv.session_state_reveal(s_b)
    if "z" not in state:
        return adv.blocked(name, "Z-unavailable", revealed=sorted(state), key_source=key_source)
    e = avf(Y, pol)
    w = state["z"] / (B * Y ** e) ** (G.h * m)
    z_a = w ** pow(dp, -1, G.q)
    key = kdf.h2(kdf.ZTranscript(z_a, "A", "B"))
    return adv.verdict(name, key, s_a, [s_b], recovered_z=z_a, key_source=key_source)


def attack_group_repr(adv: AttackerEnv, name: str = "group-repr") -> AttackReport:
    """Impersonate A to B by betting that avf(X*) equals a fixed constant c."""
    G = adv.curve
    pol = _pol(G, MQV)
    A = adv.honest_party("A", [MQV]).public_key(MQV)
    B = adv.honest_party("B", [MQV]).public_key(MQV)
    # the attacker reads c off one point and assumes every point shares it
    c = avf(G.g ** adv.random_scalar(), pol)
    xs = adv.random_scalar()
    Xs = G.g ** xs / A ** c
    Y, s_b = adv.respond(MQV, "B", "A", Xs)
    key = kdf.h2(kdf.ZTranscript((Y * B ** c) ** (G.h * xs), "A", "B"))
    return adv.verdict(name, key, s_b, [], assumed_avf=c,
                       avf_x_star=avf(Xs, pol), avf_y=avf(Y, pol))


def attack_um_z1_leak(adv: AttackerEnv) -> AttackReport:
    """Replay a leaked Z1 = g^ab to impersonate A with a fresh ephemeral."""
    name = "um-z1-leak"
    G = adv.curve
    adv.honest_party("A", [UM])
    adv.honest_party("B", [UM])
    X, s_a = adv.initiate(UM, "A", "B")
    Y, s_b = adv.respond(UM, "B", "A", X)
    adv.complete(UM, "A", "B", X, Y)
    state = adv.session_state_reveal(s_a)
    if "z1" not in state:
        return adv.blocked(name, "Z-unavailable", revealed=sorted(state))
    z1 = state["z1"]
    xp = adv.random_scalar()
    Xp = G.g ** xp
    Yp, s_b2 = adv.respond(UM, "B", "A", Xp)
    key = kdf.h1(kdf.UMTranscript(z1, Yp ** xp, "A", "B", Xp, Yp))
    return adv.verdict(name, key, s_b2, [s_a, s_b])


def _kci_setup(adv: AttackerEnv, scheme: Scheme):
    adv.honest_party("A", [scheme])
    B = adv.honest_party("B", [scheme]).public_key(scheme)
    corr = adv.corrupt("A")
    if corr.private is None:
        return None
    a = corr.private[scheme]
    y = adv.random_scalar()
    Y = adv.curve.g ** y
    X, s_a = adv.respond(scheme, "A", "B", Y)
    return a, y, Y, X, B, s_a


def attack_um_kci(adv: AttackerEnv) -> AttackReport:
    """With A's static key, impersonate B to A."""
    name = "um-kci"
    run = _kci_setup(adv, UM)
    if run is None:
        return adv.blocked(name, "plaintext-unavailable")
    a, y, Y, X, B, s_a = run
    key = kdf.h1(kdf.UMTranscript(B ** a, X ** y, "B", "A", Y, X))
    return adv.verdict(name, key, s_a)


def attack_mqv_kci(adv: AttackerEnv) -> AttackReport:
    """Same as UM KCI; the term X^{heb} stays out of reach without b."""
    name = "mqv-kci"
    run = _kci_setup(adv, MQV)
    if run is None:
        return adv.blocked(name, "plaintext-unavailable")
    a, y, Y, X, B, s_a = run
    G = adv.curve
    pol = _pol(G, MQV)
    d, e = avf(X, pol), avf(Y, pol)
    guess = X ** (G.h * y) * (Y * B ** e) ** (G.h * d * a)
    key = kdf.h2(kdf.ZTranscript(guess, "B", "A"))
    return adv.verdict(name, key, s_a)


def attack_sm2_kci(adv: AttackerEnv) -> AttackReport:
    """SM2 variant; the unknown term is X^{hdb}."""
    name = "sm2-kci"
    run = _kci_setup(adv, SM2)
    if run is None:
        return adv.blocked(name, "plaintext-unavailable")
    a, y, Y, X, B, s_a = run
    G = adv.curve
    pol = _pol(G, SM2)
    d, e = avf(X, pol), avf(Y, pol)
    guess = (B * Y ** e) ** (G.h * a) * X ** (G.h * d * e * y)
    key = kdf.h2(kdf.ZTranscript(guess, "B", "A"))
    return adv.verdict(name, key, s_a)


# -- the matrix -------------------------------------------------------------

ATTACKS: dict[str, tuple[Callable[[AttackerEnv], AttackReport], GroupParams]] = {
    "kaliski-uks": (attack_kaliski_uks, TOY),
    "xu-1": (attack_xu1, TOY),
    "xu-2": (attack_xu2, TOY),
    "group-repr/mock": (lambda adv: attack_group_repr(adv, "group-repr/mock"), MOCK),
    "group-repr/toy": (lambda adv: attack_group_repr(adv, "group-repr/toy"), TOY),
    "group-repr/P-256": (lambda adv: attack_group_repr(adv, "group-repr/P-256"), P256),
    "um-z1-leak": (attack_um_z1_leak, TOY),
    "um-kci": (attack_um_kci, TOY),
    "mqv-kci": (attack_mqv_kci, TOY),
    "sm2-kci": (attack_sm2_kci, TOY),
}

_REG = "blocked:registration-blocked"
_Z = "blocked:Z-unavailable"
_PT = "blocked:plaintext-unavailable"
_DIFF = "failed:keys-differ"
_OK = "success"


def _row(strict, ke, rev_strict, rev, software):
    return dict(zip([p.value for p in PROFILES], [strict, ke, rev_strict, rev, software]))


EXPECTED_MATRIX: dict[str, dict[str, str]] = {
    "kaliski-uks": _row(_REG, _OK, _REG, _Z, _OK),
    "xu-1": _row(_REG, _OK, _REG, _Z, _OK),
    "xu-2": _row(_PT, _OK, _Z, _Z, _OK),
    "group-repr/mock": _row(_OK, _OK, _OK, _OK, _OK),
    "group-repr/toy": _row(_DIFF, _DIFF, _DIFF, _DIFF, _DIFF),
    "group-repr/P-256": _row(_DIFF, _DIFF, _DIFF, _DIFF, _DIFF),
    "um-z1-leak": _row(_Z, _Z, _Z, _Z, _OK),
    "um-kci": _row(_PT, _PT, _OK, _OK, _OK),
    "mqv-kci": _row(_PT, _PT, _DIFF, _DIFF, _DIFF),
    "sm2-kci": _row(_PT, _PT, _DIFF, _DIFF, _DIFF),
}


def run_attack(name: str, profile: Profile | str, seed: int | str = 0) -> AttackReport:
    try:
        fn, curve = ATTACKS[name]
    except KeyError:
        raise KeyError(f"unknown attack {name!r}; known: {', '.join(ATTACKS)}") from None
    return fn(AttackerEnv(profile, curve, seed))


def run_matrix(attacks=None, profiles=None, seed: int | str = 0) -> dict:
    attacks = list(attacks or ATTACKS)
    profiles = [Profile(p) for p in (profiles or PROFILES)]
    rows, reports = [], []
    for name in attacks:
        cells = {}
        for p in profiles:
            r = run_attack(name, p, seed)
            cells[p.value] = r.cell
            reports.append(r.to_dict())
        rows.append({"attack": name, "cells": cells})
    return {"version": 1, "seed": seed, "profiles": [p.value for p in profiles],
            "rows": rows, "reports": reports}


def matrix_diff(matrix: dict) -> list[str]:
    """Cells that differ from the expected table, as readable lines."""
    out = []
    for row in matrix["rows"]:
        expected = EXPECTED_MATRIX.get(row["attack"], {})
        for profile, cell in row["cells"].items():
            want = expected.get(profile)
            if cell != want:
                out.append(f"{row['attack']} @ {profile}: got {cell}, expected {want}")
    return out


def render_table(matrix: dict) -> str:
    profiles = matrix["profiles"]
    header = ["attack"] + profiles
    body = [[row["attack"]] + [row["cells"][p] for p in profiles] for row in matrix["rows"]]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    lines = [fmt.format(*header), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*r) for r in body]
    return "\n".join(lines) + "\n"


# -- oracle checkers --------------------------------------------------------

def verify_mqv_functionality(X: Point, x: int, Y: Point, Z: Point, A: Point, a: int, B: Point) -> bool:
    """Accept Z iff Z = (Y B^e)^{h(x + d a)} with d = avf(X), e = avf(Y)."""
    G = X.group
    if not _valid(G, X, Y, Z, A, B) or G.g ** x != X or G.g ** a != A:
        return False
    pol = G.avf_policy(AvfVariant.MQV)
    d, e = avf(X, pol), avf(Y, pol)
    return Z == (Y * B ** e) ** (G.h * ((x + d * a) % G.q))


def verify_sm2_functionality(X: Point, x: int, Y: Point, Z: Point, A: Point, a: int, B: Point) -> bool:
    """Accept Z iff Z = (B Y^e)^{h(a + d x)} with d = avf'(X), e = avf'(Y)."""
    G = X.group
    if not _valid(G, X, Y, Z, A, B) or G.g ** x != X or G.g ** a != A:
        return False
    pol = G.avf_policy(AvfVariant.SM2)
    d, e = avf(X, pol), avf(Y, pol)
    return Z == (B * Y ** e) ** (G.h * ((a + d * x) % G.q))


def _valid(G, *points) -> bool:
    return all(isinstance(P, Point) and G.contains(P) and not P.is_identity for P in points[:2]) \
        and all(isinstance(P, Point) and G.contains(P) for P in points[2:])
