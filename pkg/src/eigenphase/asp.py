"""The abelian stabilizer solver.

A group action of Z^k on a coded finite set is supplied as a blackbox
callable.  Sampling works on the orbit of the base point: the orbit
permutations share the Fourier eigenbasis, so measuring their eigenphases
exactly (phase_est) draws a near-uniform random character of the quotient
group.  Characters pin down the stabilizer lattice through exact integer
congruences, reduced to the canonical (Hermite) basis.

Order finding, factoring and discrete logarithms are thin front ends over
one- and two-generator modular-multiplication actions.

All post-processing is exact: characters are Fractions, lattices are Python
integers; floating point never touches the reconstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .circuits import Gate, PermutationTable
from .phase_est import (InconsistentLocalizationError, PhaseSampler,
                        ReconstructionFailureError,
                        measure_eigenvalue_on_sampler)
from .reversible import IntegerControlledGate


class SizeBoundError(ValueError):
    """A group element exceeded the fixed-width coding bound."""


class SolveFailure(RuntimeError):
    """Soft failure: reconstruction did not verify; the caller may retry."""


@dataclass
class GroupAction:
    """Blackbox action of Z^k on a subset of B^n.

    ``apply_fn(g, x)`` maps a k-tuple of integers and a coded point to a
    coded point; it must satisfy the action axioms on the orbit of
    ``base_point``.  ``size_bound`` is the two's-complement width per
    component accepted by the blackbox (the exponent ladder needs up to
    2n + 1 bits, so the default is 2n + 4).
    """

    k: int
    n: int
    base_point: int
    apply_fn: Callable[[tuple[int, ...], int], int]
    size_bound: int | None = None
    name: str = "action"
    # call accounting: gate_uses counts quantum invocations of the blackbox
    # (one per controlled-power application); raw_evals counts classical
    # evaluations spent building permutation tables
    gate_uses: int = field(default=0, repr=False)
    raw_evals: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.size_bound is None:
            self.size_bound = 2 * self.n + 4
        if not 0 <= self.base_point < (1 << self.n):
            raise ValueError("base point does not fit the coding width")
        self._orbit: list[int] | None = None
        self._tables: dict[tuple[int, ...], PermutationTable] = {}

    def apply(self, g: Sequence[int], x: int) -> int:
        g = tuple(int(c) for c in g)
        if len(g) != self.k:
            raise ValueError("group element has the wrong rank")
        limit = 1 << (self.size_bound - 1)
        if any(not -limit <= c < limit for c in g):
            raise SizeBoundError(f"component exceeds {self.size_bound}-bit coding")
        self.raw_evals += 1
        y = int(self.apply_fn(g, x))
        if not 0 <= y < (1 << self.n):
            raise ValueError("blackbox output does not fit the coding width")
        return y

    def orbit(self) -> list[int]:
        """Orbit of the base point under the generator set, sorted."""
        if self._orbit is None:
            seen = {self.base_point}
            frontier = [self.base_point]
            steps = [tuple(1 if i == j else 0 for i in range(self.k))
                     for j in range(self.k)]
            steps += [tuple(-c for c in s) for s in steps]
            while frontier:
                x = frontier.pop()
                for s in steps:
                    y = self.apply(s, x)
                    if y not in seen:
                        seen.add(y)
                        frontier.append(y)
            self._orbit = sorted(seen)
        return self._orbit

    def permutation_table(self, g: tuple[int, ...]) -> PermutationTable:
        """The permutation x -> g(x) on the orbit, built with one classical
        evaluation per orbit point and cached per g."""
        g = tuple(int(c) for c in g)
        if g not in self._tables:
            orbit = self.orbit()
            mapping = {x: self.apply(g, x) for x in orbit}
            self._tables[g] = PermutationTable(self.n, mapping, domain=orbit,
                                               name=f"{self.name}{list(g)}")
        return self._tables[g]


def modular_action(generators: Sequence[int], modulus: int,
                   base: int = 1) -> GroupAction:
    """The action (m_1..m_k, x) -> g_1^m_1 ... g_k^m_k x  (mod modulus)."""
    gens = [int(g) % modulus for g in generators]
    if modulus < 2:
        raise ValueError("modulus must be at least 2")
    for g in gens:
        if math.gcd(g, modulus) != 1:
            raise ValueError(f"generator {g} is not invertible mod {modulus}")
    n = (modulus - 1).bit_length()

    def apply_fn(m: tuple[int, ...], x: int) -> int:
        y = x % modulus
        for g, e in zip(gens, m):
            y = y * pow(g, e, modulus) % modulus
        return y

    return GroupAction(k=len(gens), n=n, base_point=base % modulus,
                       apply_fn=apply_fn,
                       name=f"mul{gens}mod{modulus}")


class OrbitPowerGate(IntegerControlledGate):
    """Integer-controlled powers of an orbit generator.

    ``power(e)`` asks the blackbox for the single element e * e_j and builds
    the orbit permutation from it: one blackbox call per controlled power,
    never e repeated applications.
    """

    def __init__(self, action: GroupAction, generator_index: int,
                 control_width: int):
        self.action = action
        self.generator_index = generator_index
        base = self._gate_for(1)
        super().__init__(payload=base, control_width=control_width)

    def _gate_for(self, exponent: int) -> Gate:
        g = tuple(exponent if i == self.generator_index else 0
                  for i in range(self.action.k))
        return Gate.permutation(self.action.permutation_table(g))

    def power(self, exponent: int) -> Gate:
        if exponent == 0:
            size = 1 << self.action.n
            return Gate.permutation(PermutationTable(self.action.n,
                                                     list(range(size)), name="id"))
        return self._gate_for(exponent)

    def inverse_gate(self) -> Gate:
        return self._gate_for(-1)


def orbit_generator_gate(action: GroupAction, generator_index: int,
                         exponent_bits: int | None = None) -> OrbitPowerGate:
    """Controlled powers of the generator's orbit permutation."""
    if not 0 <= generator_index < action.k:
        raise ValueError("generator index out of range")
    if exponent_bits is None:
        exponent_bits = 2 * action.n + 1
    return OrbitPowerGate(action, generator_index, exponent_bits)


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    """An element of the character group: k exact rationals mod 1."""

    components: tuple[Fraction, ...]

    def __init__(self, components):
        comps = tuple(Fraction(c) % 1 for c in components)
        object.__setattr__(self, "components", comps)

    def __iter__(self):
        return iter(self.components)

    def pairing(self, g: Sequence[int]) -> Fraction:
        """The bilinear pairing <h, g> = sum h_j g_j  (mod 1)."""
        return sum((c * int(e) for c, e in zip(self.components, g)),
                   Fraction(0)) % 1


def sample_character(action: GroupAction, eps: float,
                     rng: np.random.Generator) -> Character:
    """Draw a near-uniform random character of the orbit quotient group.

    Prepares |base_point>, then measures each generator's eigenphase exactly
    and in sequence on the same register (the first measurement collapses
    onto a shared eigenvector; later components are consistent with it).
    A reconstruction failure is retried once on the collapsed register, then
    surfaced.  The measured phase phi relates to the character component by
    h_j = -phi_j mod 1 (the Fourier eigenvalue is exp(-2 pi i h_j)).
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must be in (0, 1/2)")
    state = np.zeros(1 << action.n, dtype=np.complex128)
    state[action.base_point] = 1.0
    sampler = PhaseSampler(state, rng)
    components = []
    for j in range(action.k):
        upow = orbit_generator_gate(action, j)
        attempts = 0
        while True:
            try:
                shots_before = sampler.shots
                phi = measure_eigenvalue_on_sampler(sampler, upow, eps,
                                                    n_bits=action.n)
                break
            except (ReconstructionFailureError, InconsistentLocalizationError):
                attempts += 1
                if attempts > 1:
                    raise
            finally:
                action.gate_uses += sampler.shots - shots_before
        components.append((-phi) % 1)
    char = Character(components)
    if any(c.denominator > (1 << action.n) for c in char):
        raise SolveFailure("character denominator exceeds 2^n")
    return char


# ---------------------------------------------------------------------------
# integer lattices


@dataclass(frozen=True)
class LatticeBasis:
    """Full-rank integer lattice basis; columns are the basis vectors."""

    matrix: tuple[tuple[int, ...], ...]  # row-major

    def __init__(self, rows):
        mat = tuple(tuple(int(v) for v in row) for row in rows)
        k = len(mat)
        if any(len(row) != k for row in mat):
            raise ValueError("basis matrix must be square")
        object.__setattr__(self, "matrix", mat)

    @property
    def k(self) -> int:
        return len(self.matrix)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(self.matrix[i][j] for i in range(self.k))

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.k)]

    def determinant(self) -> int:
        return _int_determinant([list(r) for r in self.matrix])

    def contains(self, vector: Sequence[int]) -> bool:
        """Exact membership by fraction-free solving."""
        sol = _solve_integer(self.matrix, list(vector))
        return sol is not None

    def is_canonical(self) -> bool:
        m = self.matrix
        for i in range(self.k):
            if m[i][i] <= 0:
                return False
            for j in range(self.k):
                if i > j and m[i][j] != 0:
                    return False
                if i < j and not 0 <= m[i][j] < m[i][i]:
                    return False
        return True


def _int_determinant(m: list[list[int]]) -> int:
    """Bareiss fraction-free determinant."""
    k = len(m)
    m = [row[:] for row in m]
    sign, prev = 1, 1
    for i in range(k - 1):
        if m[i][i] == 0:
            for r in range(i + 1, k):
                if m[r][i] != 0:
                    m[i], m[r] = m[r], m[i]
                    sign = -sign
                    break
            else:
                return 0
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                m[r][c] = (m[r][c] * m[i][i] - m[r][i] * m[i][c]) // prev
            m[r][i] = 0
        prev = m[i][i]
    return sign * m[-1][-1]


def _solve_integer(matrix, target) -> list[int] | None:
    """Solve M x = target over the integers, or None (uses Fractions)."""
    k = len(matrix)
    a = [[Fraction(matrix[i][j]) for j in range(k)] + [Fraction(target[i])]
         for i in range(k)]
    col = 0
    for i in range(k):
        pivot = next((r for r in range(i, k) if a[r][i] != 0), None)
        if pivot is None:
            return None
        a[i], a[pivot] = a[pivot], a[i]
        for r in range(k):
            if r != i and a[r][i] != 0:
                f = a[r][i] / a[i][i]
                a[r] = [x - f * y for x, y in zip(a[r], a[i])]
    out = []
    for i in range(k):
        x = a[i][k] / a[i][i]
        if x.denominator != 1:
            return None
        out.append(int(x))
    return out


def hermite_normal_form(basis: LatticeBasis | Sequence[Sequence[int]]) -> LatticeBasis:
    """Canonical upper-triangular column basis of a full-rank lattice.

    Conditions: entries below the diagonal vanish, diagonals are positive,
    and every entry right of a diagonal is reduced into [0, diagonal).
    Column operations only, so the lattice is unchanged; the form is unique,
    hence idempotent.
    """
    if isinstance(basis, LatticeBasis):
        rows = [list(r) for r in basis.matrix]
    else:
        rows = [[int(v) for v in r] for r in basis]
    k = len(rows)
    cols = [[rows[i][j] for i in range(k)] for j in range(k)]

    for i in range(k - 1, -1, -1):
        active = list(range(i + 1))
        # Euclid across row i of the active columns
        while True:
            nonzero = [j for j in active if cols[j][i] != 0]
            if not nonzero:
                raise ValueError("basis is rank deficient")
            if len(nonzero) == 1:
                break
            nonzero.sort(key=lambda j: abs(cols[j][i]))
            piv = nonzero[0]
            for j in nonzero[1:]:
                q = cols[j][i] // cols[piv][i]
                cols[j] = [a - q * b for a, b in zip(cols[j], cols[piv])]
        j = nonzero[0]
        cols[i], cols[j] = cols[j], cols[i]
        if cols[i][i] < 0:
            cols[i] = [-v for v in cols[i]]

    for j in range(k):
        for i in range(j - 1, -1, -1):
            q = cols[j][i] // cols[i][i]
            if q:
                cols[j] = [a - q * b for a, b in zip(cols[j], cols[i])]

    out = LatticeBasis([[cols[j][i] for j in range(k)] for i in range(k)])
    assert out.is_canonical()
    return out


def characters_to_lattice(samples: Sequence[Character], k: int) -> LatticeBasis:
    """Basis of { g : <h, g> = 0 (mod 1) for every sampled character h }.

    Lifts all components to a common denominator Q, solves the integer
    congruence system A g = 0 (mod Q) by column reduction of [A | Q I] with
    tracked transforms, and returns the canonical form.  The lattice always
    contains Q Z^k, so it is full rank.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one character sample")
    for h in samples:
        if len(h.components) != k:
            raise ValueError("character rank mismatch")
    q_common = 1
    for h in samples:
        for c in h:
            q_common = q_common * c.denominator // math.gcd(q_common, c.denominator)
    m = len(samples)
    a_rows = [[int(c * q_common) % q_common for c in h] for h in samples]

    # stacked matrix: top m rows [A | Q I], bottom k tracking rows [I | 0]
    width = k + m
    cols = []
    for j in range(k):
        top = [a_rows[r][j] for r in range(m)]
        track = [1 if i == j else 0 for i in range(k)]
        cols.append(top + track)
    for r in range(m):
        top = [q_common if rr == r else 0 for rr in range(m)]
        cols.append(top + [0] * k)

    pivot = width - 1
    for row in range(m - 1, -1, -1):
        while True:
            nonzero = [j for j in range(pivot + 1) if cols[j][row] != 0]
            if not nonzero:
                break
            if len(nonzero) == 1:
                j = nonzero[0]
                cols[pivot], cols[j] = cols[j], cols[pivot]
                pivot -= 1
                break
            nonzero.sort(key=lambda j: abs(cols[j][row]))
            piv = nonzero[0]
            for j in nonzero[1:]:
                qq = cols[j][row] // cols[piv][row]
                cols[j] = [a - qq * b for a, b in zip(cols[j], cols[piv])]

    kernel_cols = [c for c in cols[:pivot + 1]]
    if len(kernel_cols) != k:
        raise AssertionError("kernel dimension must equal k")
    gens = [[col[m + i] for col in kernel_cols] for i in range(k)]
    return hermite_normal_form(LatticeBasis(gens))


# ---------------------------------------------------------------------------
# the solver and its front ends


@dataclass(frozen=True)
class ASPSolution:
    basis: LatticeBasis
    samples_used: int
    epsilon_used: float
    blackbox_calls: int


def solve_asp(action: GroupAction, rng: np.random.Generator,
              num_samples: int | None = None,
              eps: float | None = None) -> ASPSolution:
    """One attempt at the stabilizer basis; success probability >= 2/3.

    Draws n + 4 characters at eps = 1/(6 k l), reconstructs the kernel
    lattice, and verifies every canonical column against the blackbox.
    Verification failure raises SolveFailure so the caller can retry.
    """
    l = num_samples if num_samples is not None else action.n + 4
    if eps is None:
        eps = 1.0 / (6.0 * action.k * l)
    calls_before = action.gate_uses
    try:
        chars = [sample_character(action, eps, rng) for _ in range(l)]
    except (ReconstructionFailureError, InconsistentLocalizationError) as exc:
        raise SolveFailure(f"character sampling failed: {exc}") from exc
    basis = characters_to_lattice(chars, action.k)
    for g in basis.columns():
        try:
            fixed = action.apply(g, action.base_point) == action.base_point
        except SizeBoundError:
            fixed = False
        if not fixed:
            raise SolveFailure(f"column {g} does not stabilize the base point")
    return ASPSolution(basis=basis, samples_used=l, epsilon_used=eps,
                       blackbox_calls=action.gate_uses - calls_before)


def _tally(stats: dict | None, action: GroupAction) -> None:
    if stats is None:
        return
    stats["gate_uses"] = stats.get("gate_uses", 0) + action.gate_uses
    stats["raw_evals"] = stats.get("raw_evals", 0) + action.raw_evals
    stats["attempts"] = stats.get("attempts", 0) + 1


def find_order(g: int, modulus: int, rng: np.random.Generator,
               attempts: int = 12, stats: dict | None = None) -> int:
    """Multiplicative order of g modulo `modulus` via the rank-1 stabilizer."""
    g = g % modulus
    if math.gcd(g, modulus) != 1:
        raise ValueError("g must be invertible modulo the modulus")
    if g == 1:
        return 1
    last: SolveFailure | None = None
    for _ in range(attempts):
        action = modular_action([g], modulus)
        try:
            sol = solve_asp(action, rng)
        except SolveFailure as exc:
            last = exc
            continue
        finally:
            _tally(stats, action)
        return sol.basis.matrix[0][0]
    raise SolveFailure(f"order finding failed after {attempts} attempts: {last}")


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _perfect_power_root(n: int) -> int | None:
    for k in range(2, n.bit_length() + 1):
        root = round(n ** (1.0 / k))
        for cand in (root - 1, root, root + 1):
            if cand > 1 and cand**k == n:
                return cand
    return None


def factor(n: int, rng: np.random.Generator, base_cap: int = 20,
           stats: dict | None = None) -> tuple[int, int]:
    """Split an odd composite into two nontrivial factors.

    Standard randomized reduction to order finding: pick a base, find its
    (even) order r, and extract gcd(b^(r/2) +- 1, n).  Retries up to
    ``base_cap`` random bases.
    """
    if n % 2 == 0 or n < 9:
        raise ValueError("n must be an odd composite")
    if _is_probable_prime(n):
        raise ValueError(f"{n} is prime")
    root = _perfect_power_root(n)
    if root is not None:
        raise ValueError(f"{n} is a perfect power of {root}")
    for _ in range(base_cap):
        b = int(rng.integers(2, n - 1))
        d = math.gcd(b, n)
        if d > 1:
            return tuple(sorted((d, n // d)))
        try:
            r = find_order(b, n, rng, stats=stats)
        except SolveFailure:
            continue
        if r % 2:
            continue
        x = pow(b, r // 2, n)
        if x == n - 1:
            continue
        for cand in (math.gcd(x - 1, n), math.gcd(x + 1, n)):
            if 1 < cand < n:
                return tuple(sorted((cand, n // cand)))
    raise SolveFailure(f"no factor found within {base_cap} bases")


def discrete_log(q: int, zeta: int, g: int, rng: np.random.Generator,
                 attempts: int = 12, stats: dict | None = None) -> int:
    """Solve zeta^m = g (mod q) for prime q via the rank-2 stabilizer.

    The stabilizer of 1 under (m, r, x) -> zeta^m g^r x contains (m*, -1)
    exactly when zeta^(m*) = g; the canonical basis exposes it as the
    second column (m12, 1) with m = -m12 mod (q-1).
    """
    if not _is_probable_prime(q):
        raise ValueError("q must be prime")
    zeta, g = zeta % q, g % q
    if g == 0 or zeta == 0:
        raise ValueError("zeta and g must be nonzero mod q")
    if not _is_primitive_root(zeta, q):
        raise ValueError(f"{zeta} is not a primitive root mod {q}")
    if g == 1:
        return 0
    last: SolveFailure | None = None
    for _ in range(attempts):
        action = modular_action([zeta, g], q)
        try:
            sol = solve_asp(action, rng)
        except SolveFailure as exc:
            last = exc
            continue
        finally:
            _tally(stats, action)
        mat = sol.basis.matrix
        if mat[1][1] != 1:
            last = SolveFailure("lattice misses the (m, -1) coset")
            continue
        m = (-mat[0][1]) % (q - 1)
        if pow(zeta, m, q) == g:
            return m
        last = SolveFailure("extracted exponent failed verification")
    raise SolveFailure(f"discrete log failed after {attempts} attempts: {last}")


def _is_primitive_root(zeta: int, q: int) -> bool:
    order = q - 1
    f, rest = {}, order
    p = 2
    while p * p <= rest:
        while rest % p == 0:
            f[p] = 1
            rest //= p
        p += 1
    if rest > 1:
        f[rest] = 1
    return all(pow(zeta, order // p, q) != 1 for p in f)
