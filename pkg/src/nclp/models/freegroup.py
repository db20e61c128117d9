"""The group algebra of a finitely generated free group, with exact even
L^p norms and the length-decay (Poisson) semigroup.

Words are tuples of nonzero signed generator indices (+i for c_i, -i for
its inverse), always kept in reduced form; |g| is the reduced letter
count.  Polynomials are finitely supported coefficient maps on words with
the normalized trace tau(x) = coefficient at the empty word.  Even-power
norms ||x||_p = tau((x* x)^{p/2})^{1/p} are finite convolutions, hence
computed exactly (no spectral truncation); p = 2 collapses to the
l2 norm of the coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

Word = tuple  # of nonzero ints, reduced

EVEN_PS = (2, 4, 6, 8)
DEFAULT_SUPPORT_CAP = 200_000


class SupportOverflowError(RuntimeError):
    """A product's support grew beyond the configured cap."""


def reduce_word(letters) -> Word:
    out = []
    for letter in letters:
        letter = int(letter)
        if letter == 0:
            raise ValueError("letters are nonzero signed generator indices")
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inverse(w: Word) -> Word:
    return tuple(-letter for letter in reversed(w))


def word_mul(a: Word, b: Word) -> Word:
    return reduce_word(a + b)


def word_length(w: Word) -> int:
    return len(w)


def word_from_string(s: str) -> Word:
    """Parse "a B a" (lowercase = generator, uppercase = inverse); "e" is
    the empty word.  Generator letters are a..z in order."""
    s = s.strip()
    if s in ("", "e"):
        return ()
    letters = []
    for tok in s.split():
        if len(tok) != 1 or not tok.isalpha():
            raise ValueError(f"bad word token {tok!r}")
        idx = ord(tok.lower()) - ord("a") + 1
        letters.append(idx if tok.islower() else -idx)
    return reduce_word(letters)


def word_to_string(w: Word) -> str:
    if not w:
        return "e"
    out = []
    for letter in w:
        ch = chr(ord("a") + abs(letter) - 1)
        out.append(ch if letter > 0 else ch.upper())
    return " ".join(out)


class GroupPoly:
    """Finitely supported element of the free-group algebra."""

    __slots__ = ("coeffs", "cap")

    def __init__(self, coeffs=None, cap: int = DEFAULT_SUPPORT_CAP):
        self.coeffs = {}
        self.cap = cap
        if coeffs:
            for w, c in coeffs.items():
                w = reduce_word(w)
                c = complex(c)
                if c != 0:
                    self.coeffs[w] = self.coeffs.get(w, 0.0) + c
        self._trim()

    def _trim(self):
        self.coeffs = {w: c for w, c in self.coeffs.items() if c != 0}

    @classmethod
    def lam(cls, word, coeff=1.0, cap: int = DEFAULT_SUPPORT_CAP) -> "GroupPoly":
        """The scaled group element coeff * lambda(word)."""
        if isinstance(word, str):
            word = word_from_string(word)
        return cls({reduce_word(word): coeff}, cap=cap)

    @classmethod
    def zero(cls, cap: int = DEFAULT_SUPPORT_CAP) -> "GroupPoly":
        return cls({}, cap=cap)

    def support(self):
        return set(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __add__(self, other):
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0.0) + c
        return GroupPoly(out, cap=min(self.cap, other.cap))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return GroupPoly({w: scalar * c for w, c in self.coeffs.items()}, cap=self.cap)

    def __mul__(self, other):
        if not isinstance(other, GroupPoly):
            return GroupPoly(
                {w: c * other for w, c in self.coeffs.items()}, cap=self.cap
            )
        cap = min(self.cap, other.cap)
        out = {}
        for w1, c1 in self.coeffs.items():
            for w2, c2 in other.coeffs.items():
                w = word_mul(w1, w2)
                out[w] = out.get(w, 0.0) + c1 * c2
                if len(out) > cap:
                    raise SupportOverflowError(
                        f"product support exceeded the cap of {cap} words"
                    )
        return GroupPoly(out, cap=cap)

    def star(self) -> "GroupPoly":
        return GroupPoly(
            {word_inverse(w): np.conj(c) for w, c in self.coeffs.items()}, cap=self.cap
        )

    def trace(self) -> complex:
        """Normalized trace: the coefficient at the empty word."""
        return complex(self.coeffs.get((), 0.0))

    def norm2(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def norm_even(self, p: int) -> float:
        """Exact || . ||_p for even integer p via repeated convolution."""
        if p not in EVEN_PS:
            raise ValueError(f"exact norms available for p in {EVEN_PS}, got {p}")
        if not self.coeffs:
            return 0.0
        if p == 2:
            return self.norm2()
        y = self.star() * self
        power = y
        for _ in range(p // 2 - 1):
            power = power * y
        val = power.trace().real
        return max(val, 0.0) ** (1.0 / p)

    def poisson(self, t: float) -> "GroupPoly":
        """Length-decay semigroup: the coefficient at g picks up e^{-t |g|}."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        return GroupPoly(
            {w: c * math.exp(-t * len(w)) for w, c in self.coeffs.items()},
            cap=self.cap,
        )

    def length_multiplier(self, f, apply_at_identity: bool = False) -> "GroupPoly":
        """Multiply the coefficient at g by f(|g|) for g != e; the identity
        coefficient is kept unless ``apply_at_identity`` (the multiplier
        theorems quantify over the non-unit words only)."""
        out = {}
        for w, c in self.coeffs.items():
            if w == () and not apply_at_identity:
                out[w] = c
            else:
                out[w] = c * f(len(w))
        return GroupPoly(out, cap=self.cap)

    def __repr__(self):
        terms = ", ".join(
            f"{word_to_string(w)}: {c:.4g}" for w, c in sorted(self.coeffs.items())
        )
        return f"GroupPoly({{{terms}}})"

    # text format: lines "word re im" with the word in the spaced letter
    # syntax ("a B a"); the last two tokens are always the coefficient

    def dumps(self) -> str:
        lines = []
        for w in sorted(self.coeffs):
            c = self.coeffs[w]
            lines.append(f"{word_to_string(w)} {c.real!r} {c.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, cap: int = DEFAULT_SUPPORT_CAP) -> "GroupPoly":
        coeffs = {}
        for line in text.strip().splitlines():
            tok = line.split()
            if len(tok) < 3:
                raise ValueError(f"bad polynomial line {line!r}")
            w = word_from_string(" ".join(tok[:-2]))
            coeffs[w] = complex(float(tok[-2]), float(tok[-1]))
        return cls(coeffs, cap=cap)


def word_multiply(x: GroupPoly, y: GroupPoly) -> GroupPoly:
    """Convolution with free reduction (same as the * operator)."""
    return x * y


def group_lp_norm_even(x: GroupPoly, p: int) -> float:
    return x.norm_even(p)


def poisson_apply(x: GroupPoly, t: float) -> GroupPoly:
    return x.poisson(t)


def length_multiplier(x: GroupPoly, f, apply_at_identity: bool = False) -> GroupPoly:
    return x.length_multiplier(f, apply_at_identity)


def dyadic_unconditionality(xs, p: int = 4) -> float:
    """Worst sign-flip ratio max_eps ||sum eps_k x_k||_p / ||sum x_k||_p for
    polynomials supported on the dyadic length shells |g| = 2^k.

    Sign patterns are enumerated exactly (global sign symmetry halves the
    work), so the shell count is capped at 12.
    """
    xs = list(xs)
    if not xs:
        raise ValueError("need at least one shell polynomial")
    if len(xs) > 12:
        raise ValueError("sign enumeration capped at 12 shells")
    for k, x in enumerate(xs):
        shell = 2**k
        bad = [w for w in x.coeffs if len(w) != shell]
        if bad:
            raise ValueError(
                f"shell {k}: support must sit at length {shell}, found length "
                f"{len(bad[0])}"
            )
    total = xs[0]
    for x in xs[1:]:
        total = total + x
    den = total.norm_even(p)
    if den == 0.0:
        raise ValueError("the unsigned sum vanishes")
    best = 0.0
    n = len(xs)
    for bits in itertools.product((1.0, -1.0), repeat=n - 1):
        eps = (1.0,) + bits
        acc = GroupPoly.zero()
        for e, x in zip(eps, xs):
            acc = acc + e * x
        best = max(best, acc.norm_even(p) / den)
    return best
