"""Random command traces against a toy-curve TPM and the leak scan over them."""

from tpmke import kdf
from tpmke.curves import TOY
from tpmke.group import Point
from tpmke.tpm import Mode, Scheme, TpmError, TpmState, scan_responses, shared_values

OPS = ["create", "primary", "ephemeral", "ephemeral", "zgen", "zgen", "zgen"]


def random_trace(seed, mode, length=8, tpm_cls=TpmState):
    rng = kdf.seeded_rng(seed, "trace")
    tpm = tpm_cls(seed, mode, [TOY])
    handles, ctrs = [], []
    for _ in range(length):
        op = rng.choice(OPS)
        try:
            if op == "create":
                handles.append(tpm.tpm2_create(rng.choice(list(Scheme)), TOY)[1])
            elif op == "primary":
                handles.append(tpm.tpm2_create_primary(rng.choice(list(Scheme)), TOY)[1])
            elif op == "ephemeral":
                ctrs.append(tpm.tpm2_ec_ephemeral(TOY)[1])
            elif handles and ctrs:
                h = rng.choice(handles)
                scheme = tpm.key_scheme(h) if rng.random() < 0.8 else rng.choice(list(Scheme))
                ctr = rng.choice(ctrs)
                B = TOY.g ** rng.randrange(1, TOY.q)
                Y = TOY.g ** rng.randrange(1, TOY.q) if rng.random() < 0.9 else Point(TOY, 1, 1)
                if tpm.mode is Mode.ORIGINAL:
                    tpm.tpm2_zgen_2phase(scheme, h, ctr, B, Y)
                else:
                    tpm.tpm2_zgen_2phase_rev(scheme, h, ctr, B, Y, "owner", "peer",
                                             rng.random() < 0.5)
        except TpmError:
            pass
    return tpm


def internal_z(tpm):
    """Encodings of every Z a revised TPM computed, recomputed from its secrets."""
    if tpm.mode is not Mode.REVISED:
        return []
    secrets = tpm.audit_secrets()
    out = []
    for rec in tpm.trace:
        if rec.command != "TPM2_ZGen_2Phase_Rev" or rec.error:
            continue
        i = rec.inputs
        a = secrets[f"key:{i['keyHandle']}"]
        x = secrets[f"ephemeral:{i['ctr']}"]
        X = TOY.g ** x
        B, Y = TOY.decode(bytes.fromhex(i["B"])), TOY.decode(bytes.fromhex(i["Y"]))
        z1, z2 = shared_values(Scheme.parse(i["scheme"]), a, x, X, B, Y)
        out.append(bytes(z1))
        if z2 is not None:
            out.append(bytes(z2))
    return out


def published(tpm):
    """What the TPM is supposed to publish, recomputed from its secrets."""
    return {bytes(TOY.g ** s) for s in tpm.audit_secrets().values()}


def scan(tpm):
    secrets = tpm.audit_secrets().values()
    return scan_responses(tpm.trace, secrets, internal_z(tpm), TOY.scalar_len, published(tpm))
