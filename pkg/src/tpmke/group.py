"""Short-Weierstrass group arithmetic used by every protocol in the package.

Groups are written multiplicatively to match the protocol formulas:
``P * Q`` is the group law, ``P ** k`` is repeated application and
``~P`` is the inverse.  Three backends exist: standardized curves, a
toy curve small enough to enumerate, and a wrapper around the toy curve
whose x-coordinate representation has its low bits pinned.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field


class Backend(enum.Enum):
    REAL = "real-curve"
    TOY = "toy-curve"
    MOCK = "fixed-lsb-mock"


class GroupError(ValueError):
    """Raised for off-curve input, the identity where it is not allowed, etc."""


class AvfVariant(enum.Enum):
    MQV = "mqv"
    SM2 = "sm2"


@dataclass(frozen=True)
class AvfPolicy:
    variant: AvfVariant
    bits: int

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("avf bit length must be positive")


@dataclass(frozen=True, eq=False)
class GroupParams:
    """A curve y^2 = x^3 + ax + b over GF(p) with a subgroup of prime order q."""

    name: str
    p: int
    a: int
    b: int
    q: int
    h: int
    gx: int
    gy: int
    backend: Backend = Backend.REAL
    # fixed-LSB mock only: representation of x is (x << pinned_bits) | pinned_value
    pinned_bits: int | None = None
    pinned_value: int = 0
    _fixed_base: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def g(self) -> Point:
        return Point(self, self.gx, self.gy)

    @property
    def identity(self) -> Point:
        return Point(self, None, None)

    @property
    def order(self) -> int:
        """Order N = q*h of the full curve group."""
        return self.q * self.h

    @property
    def coord_len(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_len(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def __eq__(self, other):
        return isinstance(other, GroupParams) and self.name == other.name

    def __hash__(self):
        return hash(self.name)

    def point(self, x: int, y: int) -> Point:
        P = Point(self, x % self.p, y % self.p)
        if not self.contains(P):
            raise GroupError(f"({x}, {y}) is not on {self.name}")
        return P

    def contains(self, P: Point) -> bool:
        if P.group != self:
            return False
        if P.is_identity:
            return True
        x, y, p = P.x, P.y, self.p
        if not (0 <= x < p and 0 <= y < p):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % p == 0

    def random_scalar(self, rng: random.Random) -> int:
        """Uniform integer in [1, q-1]."""
        return rng.randrange(1, self.q)

    def lift_x(self, x: int) -> Point | None:
        """A curve point with the given x, or None if x^3+ax+b is a non-residue."""
        p = self.p
        rhs = (x * x * x + self.a * x + self.b) % p
        if rhs == 0:
            return Point(self, x, 0)
        if pow(rhs, (p - 1) // 2, p) != 1:
            return None
        if p % 4 == 3:
            y = pow(rhs, (p + 1) // 4, p)
        else:
            y = _tonelli_shanks(rhs, p)
        return Point(self, x, min(y, p - y))

    # -- arithmetic ---------------------------------------------------------

    def add(self, P: Point, Q: Point) -> Point:
        self._check(P)
        self._check(Q)
        return self._from_jacobian(self._jadd(self._to_jacobian(P), self._to_jacobian(Q)))

    def exp(self, P: Point, k: int) -> Point:
        self._check(P)
        k %= self.order
        if k == 0 or P.is_identity:
            return self.identity
        if P.x == self.gx and P.y == self.gy:
            return self._from_jacobian(self._fixed_base_mul(k))
        return self._from_jacobian(self._window_mul(self._to_jacobian(P), k))

    def neg(self, P: Point) -> Point:
        self._check(P)
        if P.is_identity:
            return P
        return Point(self, P.x, (-P.y) % self.p)

    def _check(self, P: Point):
        if not self.contains(P):
            raise GroupError(f"point is not on {self.name}")

    def _to_jacobian(self, P: Point):
        if P.is_identity:
            return (1, 1, 0)
        return (P.x, P.y, 1)

    def _from_jacobian(self, J) -> Point:
        X, Y, Z = J
        if Z == 0:
            return self.identity
        p = self.p
        zi = pow(Z, -1, p)
        zi2 = zi * zi % p
        return Point(self, X * zi2 % p, Y * zi2 * zi % p)

    def _jdouble(self, J):
        X, Y, Z = J
        if Z == 0 or Y == 0:
            return (1, 1, 0)
        p = self.p
        YY = Y * Y % p
        S = 4 * X * YY % p
        ZZ = Z * Z % p
        M = (3 * X * X + self.a * ZZ * ZZ) % p
        X3 = (M * M - 2 * S) % p
        Y3 = (M * (S - X3) - 8 * YY * YY) % p
        Z3 = 2 * Y * Z % p
        return (X3, Y3, Z3)

    def _jadd(self, J1, J2):
        X1, Y1, Z1 = J1
        X2, Y2, Z2 = J2
        if Z1 == 0:
            return J2
        if Z2 == 0:
            return J1
        p = self.p
        Z1Z1 = Z1 * Z1 % p
        Z2Z2 = Z2 * Z2 % p
        U1 = X1 * Z2Z2 % p
        U2 = X2 * Z1Z1 % p
        S1 = Y1 * Z2 * Z2Z2 % p
        S2 = Y2 * Z1 * Z1Z1 % p
        if U1 == U2:
            if S1 != S2:
                return (1, 1, 0)
            return self._jdouble(J1)
        H = (U2 - U1) % p
        R = (S2 - S1) % p
        HH = H * H % p
        HHH = H * HH % p
        V = U1 * HH % p
        X3 = (R * R - HHH - 2 * V) % p
        Y3 = (R * (V - X3) - S1 * HHH) % p
        Z3 = H * Z1 * Z2 % p
        return (X3, Y3, Z3)

    def _window_mul(self, J, k: int, w: int = 4):
        table = [(1, 1, 0), J]
        for _ in range(2, 1 << w):
            table.append(self._jadd(table[-1], J))
        acc = (1, 1, 0)
        nwin = (k.bit_length() + w - 1) // w
        mask = (1 << w) - 1
        for i in reversed(range(nwin)):
            for _ in range(w):
                acc = self._jdouble(acc)
            digit = (k >> (i * w)) & mask
            if digit:
                acc = self._jadd(acc, table[digit])
        return acc

    def _fixed_base_mul(self, k: int, w: int = 8):
        # table[i][j] = j * 2^(w*i) * g, built on first use
        table = self._fixed_base.get(w)
        if table is None:
            table = []
            base = self._to_jacobian(self.g)
            for _ in range((self.order.bit_length() + w - 1) // w):
                row = [(1, 1, 0), base]
                for _ in range(2, 1 << w):
                    row.append(self._jadd(row[-1], base))
                table.append([self._normalize(J) for J in row])
                base = self._jadd(row[-1], base)
            self._fixed_base[w] = table
        acc = (1, 1, 0)
        mask = (1 << w) - 1
        i = 0
        while k:
            digit = k & mask
            if digit:
                acc = self._jadd(acc, table[i][digit])
            k >>= w
            i += 1
        return acc

    def _normalize(self, J):
        P = self._from_jacobian(J)
        return self._to_jacobian(P)

    # -- representation -----------------------------------------------------

    def x_repr(self, P: Point) -> int:
        """The integer the protocols see as P.x."""
        if P.is_identity:
            raise GroupError("the identity has no x-coordinate")
        if self.pinned_bits is None:
            return P.x
        return (P.x << self.pinned_bits) | self.pinned_value

    def encode(self, P: Point) -> bytes:
        """Uncompressed affine encoding 04 || x || y; the identity is a single 00."""
        if P.is_identity:
            return b"\x00"
        n = self.coord_len
        return b"\x04" + P.x.to_bytes(n, "big") + P.y.to_bytes(n, "big")

    def decode(self, data: bytes) -> Point:
        if data == b"\x00":
            return self.identity
        n = self.coord_len
        if len(data) != 1 + 2 * n or data[0] != 4:
            raise GroupError("malformed point encoding")
        x = int.from_bytes(data[1:1 + n], "big")
        y = int.from_bytes(data[1 + n:], "big")
        P = Point(self, x, y)
        self._check(P)
        return P

    def avf_policy(self, variant: AvfVariant | str) -> AvfPolicy:
        """Truncation length: ceil(f/2) for MQV, floor(f/2) for SM2, f = bitlen(q)."""
        variant = AvfVariant(variant)
        if self.pinned_bits is not None:
            return AvfPolicy(variant, self.pinned_bits)
        f = self.q.bit_length()
        bits = (f + 1) // 2 if variant is AvfVariant.MQV else f // 2
        return AvfPolicy(variant, bits)


@dataclass(frozen=True, eq=False)
class Point:
    group: GroupParams
    x: int | None
    y: int | None

    @property
    def is_identity(self) -> bool:
        return self.x is None

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.group == other.group and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.group.name, self.x, self.y))

    def __mul__(self, other: Point) -> Point:
        if not isinstance(other, Point):
            return NotImplemented
        if other.group != self.group:
            raise GroupError("points belong to different groups")
        return self.group.add(self, other)

    def __truediv__(self, other: Point) -> Point:
        return self * ~other

    def __pow__(self, k: int) -> Point:
        return self.group.exp(self, k)

    def __invert__(self) -> Point:
        return self.group.neg(self)

    def __bytes__(self) -> bytes:
        return self.group.encode(self)

    def hex(self) -> str:
        return bytes(self).hex()

    def __repr__(self):
        if self.is_identity:
            return f"Point({self.group.name}, identity)"
        return f"Point({self.group.name}, x={self.x:#x}, y={self.y:#x})"


def element_mul(a: Point, b: Point) -> Point:
    return a * b


def scalar_exp(P: Point, k: int) -> Point:
    return P ** k


def is_on_curve(P: Point) -> bool:
    return P.group.contains(P)


def avf(P: Point, policy: AvfPolicy) -> int:
    """2^l + (P.x mod 2^l), with l taken from the policy."""
    if P.is_identity:
        raise GroupError("avf is undefined on the identity")
    if not P.group.contains(P):
        raise GroupError("avf input is not on the curve")
    l = policy.bits
    return (1 << l) + (P.group.x_repr(P) & ((1 << l) - 1))


def sample_points(params: GroupParams, n: int, seed: int) -> list[Point]:
    """n pseudorandom non-identity subgroup elements g^k, reproducible from seed."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = random.Random(seed)
    g = params.g
    return [g ** params.random_scalar(rng) for _ in range(n)]


def mock_fixed_lsb_group(l: int, c: int, base: GroupParams | None = None) -> GroupParams:
    """Wrap the toy curve so every x representation ends in the l-bit value c.

    Arithmetic is the base curve's; only ``x_repr`` changes, so avf becomes
    the constant 2^l + c on every element.
    """
    if not 0 <= c < (1 << l):
        raise ValueError("fixed residue must lie in [0, 2^l)")
    if base is None:
        from tpmke.curves import TOY
        base = TOY
    return GroupParams(
        name=f"{base.name}/lsb{l}={c}",
        p=base.p, a=base.a, b=base.b, q=base.q, h=base.h,
        gx=base.gx, gy=base.gy,
        backend=Backend.MOCK,
        pinned_bits=l, pinned_value=c,
    )


def unwrap(P: Point, base: GroupParams) -> Point:
    """The same coordinates viewed as an element of ``base``."""
    return Point(base, P.x, P.y)


def _tonelli_shanks(n: int, p: int) -> int:
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def is_probable_prime(n: int, rounds: int = 32) -> bool:
    if n < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    rng = random.Random(n)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def reference_hash(P: Point, bits: int) -> int:
    """SHA-2 of the point encoding truncated to its leading ``bits`` bits."""
    h = hashlib.sha256 if bits <= 256 else hashlib.sha512
    digest = int.from_bytes(h(bytes(P)).digest(), "big")
    return digest >> (h().digest_size * 8 - bits)
