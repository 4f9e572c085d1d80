"""Small finite fields F_q, q = p^f, with elements encoded as integers 0..q-1.

For f = 1 the encoding is the residue itself. For f > 1 an element is the
base-p digit vector of its polynomial representative modulo a fixed monic
irreducible polynomial, and multiplication goes through discrete-log tables.
"""

from functools import lru_cache
import itertools


def is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def _poly_mulmod(a, b, mod, p):
    # a, b: digit lists (low first) of length f; mod: monic, length f + 1
    f = len(mod) - 1
    prod = [0] * (2 * f - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
    for d in range(len(prod) - 1, f - 1, -1):
        c = prod[d]
        if c:
            for k in range(f + 1):
                prod[d - f + k] = (prod[d - f + k] - c * mod[k]) % p
    return prod[:f]


def _encode(digits, p):
    return sum(d * p ** i for i, d in enumerate(digits))


def _decode(n, p, f):
    out = []
    for _ in range(f):
        out.append(n % p)
        n //= p
    return out


class GF:
    def __init__(self, p, f=1):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if f < 1:
            raise ValueError("field degree must be positive")
        self.p = p
        self.f = f
        self.q = p ** f
        if f > 1:
            self._build_tables()

    def __repr__(self):
        return f"GF({self.q})"

    def __eq__(self, other):
        return isinstance(other, GF) and other.q == self.q and other.p == self.p

    def __hash__(self):
        return hash(("GF", self.p, self.f))

    def _build_tables(self):
        p, f, q = self.p, self.f, self.q
        for tail in itertools.product(range(p), repeat=f):
            mod = list(tail) + [1]
            if mod[0] == 0:
                continue
            # search a generator of the multiplicative group; success also
            # certifies irreducibility of the modulus
            for g in range(p, q):
                gd = _decode(g, p, f)
                exp = [1]
                cur = _decode(1, p, f)
                seen = {1}
                ok = True
                for _ in range(q - 2):
                    cur = _poly_mulmod(cur, gd, mod, p)
                    e = _encode(cur, p)
                    if e in seen or e == 0:
                        ok = False
                        break
                    seen.add(e)
                    exp.append(e)
                if ok:
                    self.modulus = mod
                    self._exp = exp
                    self._log = {e: i for i, e in enumerate(exp)}
                    return
        raise RuntimeError("no primitive polynomial found")

    def add(self, a, b):
        if self.f == 1:
            return (a + b) % self.p
        p = self.p
        out, k = 0, 1
        while a or b:
            out += ((a % p + b % p) % p) * k
            a //= p
            b //= p
            k *= p
        return out

    def neg(self, a):
        if self.f == 1:
            return (-a) % self.p
        p = self.p
        out, k = 0, 1
        while a:
            out += ((-(a % p)) % p) * k
            a //= p
            k *= p
        return out

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.f == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def scalar(self, n):
        """Image of the integer n."""
        return n % self.p

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.f == 1:
            return pow(a, -1, self.p)
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def pow(self, a, n):
        if a == 0:
            if n < 0:
                raise ZeroDivisionError("inverse of zero in a finite field")
            return 1 if n == 0 else 0
        if self.f == 1:
            return pow(a, n % (self.p - 1), self.p)
        return self._exp[(self._log[a] * n) % (self.q - 1)]

    def frob(self, a, k=1):
        """a^(p^k); negative k gives the inverse Frobenius."""
        if self.f == 1 or a == 0:
            return a
        return self.pow(a, self.p ** (k % self.f))

    def trace(self, a):
        """Absolute trace to F_p."""
        s = 0
        for k in range(self.f):
            s = self.add(s, self.frob(a, k))
        return s

    def elements(self):
        return range(self.q)

    def as_root(self, a):
        """Some x in F_q with x^p - x = a, or None when no root exists."""
        if self.trace(a) != 0:
            return None
        for x in range(self.q):
            if self.sub(self.frob(x), x) == a:
                return x
        return None


@lru_cache(maxsize=None)
def field(p, f=1):
    return GF(p, f)
