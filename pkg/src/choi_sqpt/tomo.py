"""The tomography engine.

Reconstructs individual elements of a channel's process matrix from
simulated measurements, and the full matrix by two strategies.  Both chi
and lambda matrices are ``D**2 x D**2`` arrays; a row or column pair
(x, y) flattens to ``x * D + y``.

The data matrix lambda collects the channel outputs of the matrix units:
lambda[a*D+b, c*D+d] = Tr[(|c><d|)^dagger eps(|a><b|)].  It is related to
the process matrix entrywise by lambda_{ab;cd} = chi_{ca;db}; the linear
map between the two flattened matrices is a permutation whose inverse is
its transpose, so reconstruction is index relabeling, never a dense solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import basis_state, expand_choi_four, _solve_expansion, sud_generators
from .channels import QuantumChannel
from .measure import (
    BackendConfig,
    MeasurementOutcome,
    MeasurementSetting,
    PhysicalityError,
    input_state_set,
    measure_setting,
    tp_complete,
)

__all__ = [
    "BetaPermutation",
    "ChiElementEstimate",
    "GhzProfile",
    "MeasurementPlan",
    "QuditIndexMap",
    "SqptResult",
    "beta_entry",
    "beta_permutation",
    "chi_from_json",
    "chi_from_lambda",
    "chi_to_json",
    "full_sqpt",
    "ghz_profile",
    "lambda_from_chi",
    "lambda_oracle",
    "plan_element",
    "reconstruct_element",
]

CHI_CONVENTION = "choi-row-ef"
PAULI_CONVENTION = "pauli-row-ixyz"


# --- lambda/chi index algebra -------------------------------------------------


def beta_entry(
    ef: tuple[int, int],
    gh: tuple[int, int],
    ab: tuple[int, int],
    cd: tuple[int, int],
) -> int:
    """Matrix element of the chi -> lambda map in the matrix-unit basis.

    Equals delta(e,c) * delta(f,a) * delta(g,d) * delta(h,b): column
    (ef;gh), row (ab;cd).
    """
    e, f = ef
    g, h = gh
    a, b = ab
    c, d = cd
    return int(e == c and f == a and g == d and h == b)


@dataclass(frozen=True, eq=False)
class BetaPermutation:
    """The chi -> lambda map stored as an index bijection on D^4 entries.

    forward[flat(e,f,g,h)] = flat(f,h,e,g) is the row of the single 1 in
    that column of the dense matrix.  Applying forward and then the
    transpose is the identity; the dense form is materialized only for
    small dimensions (it is D^4 x D^4).
    """

    dim: int
    forward: np.ndarray

    def __post_init__(self):
        fwd = np.array(self.forward, dtype=np.intp)
        fwd.setflags(write=False)
        object.__setattr__(self, "forward", fwd)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Forward map on a flattened chi vector: returns the lambda vector."""
        vec = np.asarray(vec)
        out = np.empty_like(vec)
        out[self.forward] = vec
        return out

    def apply_transpose(self, vec: np.ndarray) -> np.ndarray:
        """Transpose (= inverse) map on a flattened lambda vector."""
        return np.asarray(vec)[self.forward]

    def dense(self) -> np.ndarray:
        if self.dim > 3:
            raise ValueError("dense beta is only materialized for dim <= 3")
        n = self.forward.shape[0]
        mat = np.zeros((n, n))
        mat[self.forward, np.arange(n)] = 1.0
        return mat

    def parity(self) -> int:
        """Exact sign of the permutation via cycle counting."""
        seen = np.zeros(self.forward.shape[0], dtype=bool)
        sign = 1
        for start in range(self.forward.shape[0]):
            if seen[start]:
                continue
            length = 0
            j = start
            while not seen[j]:
                seen[j] = True
                j = int(self.forward[j])
                length += 1
            if length % 2 == 0:
                sign = -sign
        return sign


def beta_permutation(dim: int) -> BetaPermutation:
    if dim < 2:
        raise ValueError("beta permutation needs dim >= 2")
    e, f, g, h = np.indices((dim,) * 4)
    rows = ((f * dim + h) * dim + e) * dim + g
    return BetaPermutation(dim, rows.reshape(-1))


def lambda_oracle(channel: QuantumChannel) -> np.ndarray:
    """Data matrix computed by pushing every matrix unit through the channel.

    lambda[a*D+b, c*D+d] is the (c, d) entry of eps(|a><b|), evaluated via
    the Kraus sum extended by linearity to non-Hermitian inputs.
    """
    k = channel.kraus_stack()
    lam4 = np.einsum("mca,mdb->abcd", k, k.conj())
    d = channel.dim
    return lam4.reshape(d * d, d * d)


def chi_from_lambda(lam: np.ndarray) -> np.ndarray:
    """Process matrix from the data matrix: chi_{ca;db} = lambda_{ab;cd}."""
    lam = np.asarray(lam)
    d = math.isqrt(math.isqrt(lam.size))
    if lam.shape != (d * d, d * d):
        raise ValueError(f"lambda must be D^2 x D^2, got shape {lam.shape}")
    chi4 = np.einsum("fheg->efgh", lam.reshape(d, d, d, d))
    return chi4.reshape(d * d, d * d)


def lambda_from_chi(chi: np.ndarray) -> np.ndarray:
    """Inverse relabeling of chi_from_lambda."""
    chi = np.asarray(chi)
    d = math.isqrt(math.isqrt(chi.size))
    if chi.shape != (d * d, d * d):
        raise ValueError(f"chi must be D^2 x D^2, got shape {chi.shape}")
    lam4 = np.einsum("cadb->abcd", chi.reshape(d, d, d, d))
    return lam4.reshape(d * d, d * d)


# --- single-element planning and reconstruction -------------------------------


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    """Deduplicated measurement settings realizing one chi matrix element.

    Each term attaches a complex weight (a product of one input-expansion
    and one observable-expansion coefficient) to a setting index; the
    element value is the weighted sum of the settings' expectation values.
    """

    dim: int
    target: tuple[int, int, int, int]
    settings: tuple[MeasurementSetting, ...]
    terms: tuple[tuple[complex, int], ...]
    tp_shortcut: bool = False

    @property
    def settings_count(self) -> int:
        return len(self.settings)


def plan_element(
    e: int, f: int, g: int, h: int, dim: int, tp_shortcut: bool = False
) -> MeasurementPlan:
    """Plan the measurements that determine chi[e*D+f, g*D+h].

    The target element equals the data-matrix entry lambda_{fh;eg}, so the
    channel input is the matrix unit |f><h| (expanded over at most four
    pure states with weights r) and the observable is |g><e| (expanded over
    at most four projectors with weights s).  Settings count 1 for a
    diagonal target (e = g and f = h), 4 when exactly one of the two
    expansions is a single projector, 16 otherwise.
    """
    for idx in (e, f, g, h):
        if not 0 <= idx < dim:
            raise ValueError(f"index {idx} out of range for dimension {dim}")
    input_exp = expand_choi_four(f, h, dim)
    observable_exp = expand_choi_four(g, e, dim)
    settings: list[MeasurementSetting] = []
    by_key: dict[bytes, int] = {}
    terms: list[tuple[complex, int]] = []
    for r, psi in zip(input_exp.weights, input_exp.states):
        for s, phi in zip(observable_exp.weights, observable_exp.states):
            setting = MeasurementSetting(psi, phi)
            key = setting.canonical_key()
            idx = by_key.get(key)
            if idx is None:
                idx = len(settings)
                by_key[key] = idx
                settings.append(setting)
            terms.append((r * s, idx))
    return MeasurementPlan(
        dim=dim,
        target=(e, f, g, h),
        settings=tuple(settings),
        terms=tuple(terms),
        tp_shortcut=tp_shortcut,
    )


@dataclass(frozen=True)
class ChiElementEstimate:
    """A reconstructed chi element with quadrature-propagated uncertainty."""

    value: complex
    std_error: float
    settings_used: int
    backend: str


def _combine_terms(
    plan: MeasurementPlan, outcomes: list[MeasurementOutcome]
) -> tuple[complex, float]:
    weights = np.zeros(len(plan.settings), dtype=complex)
    for w, idx in plan.terms:
        weights[idx] += w
    value = complex(sum(w * outcomes[i].value for i, w in enumerate(weights)))
    variance = float(
        sum(abs(w) ** 2 * outcomes[i].std_error ** 2 for i, w in enumerate(weights))
    )
    return value, float(np.sqrt(variance))


def reconstruct_element(
    plan: MeasurementPlan, channel: QuantumChannel, config: BackendConfig
) -> ChiElementEstimate:
    """Measure a plan's settings and combine them into the chi element."""
    if channel.dim != plan.dim:
        raise ValueError(
            f"plan dimension {plan.dim} does not match channel dimension {channel.dim}"
        )
    outcomes = [measure_setting(channel, s, config) for s in plan.settings]
    value, std_error = _combine_terms(plan, outcomes)
    return ChiElementEstimate(value, std_error, len(plan.settings), config.descriptor)


# --- full reconstruction -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SqptResult:
    """A fully reconstructed process matrix plus measurement accounting."""

    chi: np.ndarray
    std_errors: np.ndarray
    strategy: str
    settings_total: int
    settings_measured: int
    settings_inferred: int

    def __post_init__(self):
        chi = np.array(self.chi, dtype=complex)
        err = np.array(self.std_errors, dtype=float)
        chi.setflags(write=False)
        err.setflags(write=False)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "std_errors", err)


def full_sqpt(
    channel: QuantumChannel,
    config: BackendConfig,
    strategy: str = "choi-four",
    tp_shortcut: bool = False,
    local_dim: int | None = None,
    n_sites: int | None = None,
) -> SqptResult:
    """Reconstruct the complete D^2 x D^2 process matrix.

    strategy "choi-four" runs the per-element plans for every target with a
    global outcome cache, so each distinct (input state, projector) pair is
    measured once (D^4 distinct settings).  strategy "product-hermitian"
    measures all pairs of product input states and tensor products of SU(d)
    generators, solves for the data matrix and relabels; for a multi-qudit
    system pass local_dim and n_sites with local_dim**n_sites == dim.

    With tp_shortcut (choi-four only) the computational-basis projector for
    the highest level is never measured: its expectation for each input
    state is inferred from normalization, leaving D^2 (D^2 - 1) measured
    values.  The channel must be trace preserving.
    """
    if tp_shortcut:
        if strategy != "choi-four":
            raise ValueError("tp_shortcut is defined only for the choi-four strategy")
        if not channel.is_trace_preserving(1e-10):
            raise PhysicalityError(
                "tp_shortcut requires a trace-preserving channel "
                f"(deviation {channel.tp_deviation():.3e})"
            )
    if strategy == "choi-four":
        return _full_choi_four(channel, config, tp_shortcut)
    if strategy == "product-hermitian":
        return _full_product_hermitian(channel, config, local_dim, n_sites)
    raise ValueError(f"unknown strategy {strategy!r}")


def _full_choi_four(
    channel: QuantumChannel, config: BackendConfig, tp_shortcut: bool
) -> SqptResult:
    dim = channel.dim
    plans = [
        plan_element(e, f, g, h, dim, tp_shortcut=tp_shortcut)
        for e in range(dim)
        for f in range(dim)
        for g in range(dim)
        for h in range(dim)
    ]
    distinct: dict[bytes, MeasurementSetting] = {}
    for plan in plans:
        for setting in plan.settings:
            distinct.setdefault(setting.canonical_key(), setting)

    inferred_keys: set[bytes] = set()
    if tp_shortcut:
        last = basis_state(dim - 1, dim)
        for key, setting in distinct.items():
            if setting.is_projector and np.array_equal(setting.observable, last):
                inferred_keys.add(key)

    outcomes: dict[bytes, MeasurementOutcome] = {}
    for key, setting in distinct.items():
        if key not in inferred_keys:
            outcomes[key] = measure_setting(channel, setting, config)
    for key in inferred_keys:
        setting = distinct[key]
        partials = {}
        variance = 0.0
        for level in range(dim - 1):
            probe = MeasurementSetting(setting.input_state, basis_state(level, dim))
            measured = outcomes[probe.canonical_key()]
            partials[level] = measured.value
            variance += measured.std_error**2
        outcomes[key] = MeasurementOutcome(
            tp_complete(partials, dim), float(np.sqrt(variance)), 0
        )

    chi = np.zeros((dim * dim, dim * dim), dtype=complex)
    errs = np.zeros((dim * dim, dim * dim))
    for plan in plans:
        plan_outcomes = [outcomes[s.canonical_key()] for s in plan.settings]
        value, std_error = _combine_terms(plan, plan_outcomes)
        e, f, g, h = plan.target
        chi[e * dim + f, g * dim + h] = value
        errs[e * dim + f, g * dim + h] = std_error
    return SqptResult(
        chi=chi,
        std_errors=errs,
        strategy="choi-four",
        settings_total=len(distinct),
        settings_measured=len(distinct) - len(inferred_keys),
        settings_inferred=len(inferred_keys),
    )


def _tensor_products(factors: list[np.ndarray], n_sites: int) -> list[np.ndarray]:
    out = list(factors)
    for _ in range(n_sites - 1):
        out = [np.kron(a, b) for a in out for b in factors]
    return out


def _full_product_hermitian(
    channel: QuantumChannel,
    config: BackendConfig,
    local_dim: int | None,
    n_sites: int | None,
) -> SqptResult:
    dim = channel.dim
    if (local_dim is None) != (n_sites is None):
        raise ValueError("pass local_dim and n_sites together or not at all")
    if local_dim is None:
        local_dim, n_sites = dim, 1
    if local_dim**n_sites != dim:
        raise ValueError(
            f"local_dim**n_sites = {local_dim}**{n_sites} does not equal "
            f"the channel dimension {dim}"
        )
    states = _tensor_products(input_state_set(local_dim), n_sites)
    observables = _tensor_products(list(sud_generators(local_dim).operators), n_sites)
    n = dim * dim

    data = np.empty((n, n))
    errs = np.empty((n, n))
    for m, psi in enumerate(states):
        for k, obs in enumerate(observables):
            outcome = measure_setting(channel, MeasurementSetting(psi, obs), config)
            data[m, k] = outcome.value
            errs[m, k] = outcome.std_error

    # input weights: columns of P are the vectorized state projectors, and
    # the vectorized matrix unit |a><b| is the (a*D+b)-th unit vector
    proj_cols = np.stack(
        [np.outer(s, s.conj()).reshape(-1) for s in states], axis=1
    )
    r_mat = _solve_expansion(proj_cols, np.eye(n, dtype=complex), "state projectors")
    # observable weights: targets are the adjoint units |d><c| at column c*D+d
    obs_cols = np.stack([o.reshape(-1) for o in observables], axis=1)
    cc, dd = np.indices((dim, dim))
    targets = np.zeros((n, n), dtype=complex)
    targets[(dd * dim + cc).reshape(-1), (cc * dim + dd).reshape(-1)] = 1.0
    s_mat = _solve_expansion(obs_cols, targets, "basis operators")

    lam = r_mat.T @ data @ s_mat
    lam_var = (np.abs(r_mat.T) ** 2) @ np.square(errs) @ (np.abs(s_mat) ** 2)
    return SqptResult(
        chi=chi_from_lambda(lam),
        std_errors=np.sqrt(chi_from_lambda(lam_var).real),
        strategy="product-hermitian",
        settings_total=n * n,
        settings_measured=n * n,
        settings_inferred=0,
    )


# --- multi-qudit index utilities ----------------------------------------------


@dataclass(frozen=True)
class QuditIndexMap:
    """Base-d positional bijection between global and per-site indices.

    The first site holds the most significant digit, matching the tensor
    order of kron_channel and of the product bases above.
    """

    n_sites: int
    local_dim: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("need at least one site")
        if self.local_dim < 2:
            raise ValueError("local dimension must be at least 2")

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_sites

    def compose(self, digits) -> int:
        digits = tuple(int(d) for d in digits)
        if len(digits) != self.n_sites:
            raise ValueError(f"need {self.n_sites} digits, got {len(digits)}")
        acc = 0
        for d in digits:
            if not 0 <= d < self.local_dim:
                raise ValueError(f"digit {d} out of range for base {self.local_dim}")
            acc = acc * self.local_dim + d
        return acc

    def decompose(self, a: int) -> tuple[int, ...]:
        if not 0 <= a < self.dim:
            raise ValueError(f"index {a} out of range for dimension {self.dim}")
        digits = []
        for _ in range(self.n_sites):
            digits.append(a % self.local_dim)
            a //= self.local_dim
        return tuple(reversed(digits))


@dataclass(frozen=True, eq=False)
class GhzProfile:
    """Entanglement structure of the superposition inputs for a level pair.

    The kets (|a>+|b>)/sqrt2 and (|a>+i|b>)/sqrt2 factor into a GHZ-type
    state across the sites where the digit strings of a and b differ,
    tensored with computational states on the agreeing sites; max_residual
    is the numerically verified factorization error.
    """

    a: int
    b: int
    m: int
    differing_sites: tuple[int, ...]
    ghz_plus: np.ndarray
    ghz_minus: np.ndarray
    product_part: np.ndarray
    max_residual: float


def ghz_profile(a: int, b: int, index_map: QuditIndexMap) -> GhzProfile:
    """Locate and verify the GHZ factorization of the (a, b) input states."""
    n, d = index_map.n_sites, index_map.local_dim
    dim = index_map.dim
    da = index_map.decompose(a)
    db = index_map.decompose(b)
    diff = tuple(j for j in range(n) if da[j] != db[j])
    agree = tuple(j for j in range(n) if da[j] == db[j])
    m = len(diff)

    if a == b:
        full = basis_state(a, dim)
        return GhzProfile(a, b, 0, (), np.ones(1, dtype=complex),
                          np.ones(1, dtype=complex), full, 0.0)

    va, vb = basis_state(a, dim), basis_state(b, dim)
    plus = (va + vb) / np.sqrt(2)
    minus = (va + 1j * vb) / np.sqrt(2)

    ia = ib = 0
    for j in diff:
        ia = ia * d + da[j]
        ib = ib * d + db[j]
    ghz_plus = np.zeros(d**m, dtype=complex)
    ghz_minus = np.zeros(d**m, dtype=complex)
    ghz_plus[ia] = ghz_minus[ia] = 1 / np.sqrt(2)
    ghz_plus[ib] = 1 / np.sqrt(2)
    ghz_minus[ib] = 1j / np.sqrt(2)

    ip = 0
    for j in agree:
        ip = ip * d + da[j]
    product_part = np.zeros(d ** (n - m), dtype=complex)
    product_part[ip] = 1.0

    residual = 0.0
    for state, factor in ((plus, ghz_plus), (minus, ghz_minus)):
        tensor = state.reshape((d,) * n)
        mat = np.transpose(tensor, diff + agree).reshape(d**m, d ** (n - m))
        residual = max(residual, float(np.max(np.abs(mat - np.outer(factor, product_part)))))
    return GhzProfile(a, b, m, diff, ghz_plus, ghz_minus, product_part, residual)


# --- chi JSON format -----------------------------------------------------------
#
# {"dim": D, "convention": "choi-row-ef", "entries": [[re, im], ...]} with the
# entries row-major over the D^2 x D^2 matrix.


def chi_to_json(chi: np.ndarray, convention: str = CHI_CONVENTION) -> dict:
    chi = np.asarray(chi, dtype=complex)
    d = math.isqrt(math.isqrt(chi.size))
    if chi.shape != (d * d, d * d):
        raise ValueError(f"chi must be D^2 x D^2, got shape {chi.shape}")
    entries = [[float(z.real), float(z.imag)] for z in chi.reshape(-1)]
    return {"dim": d, "convention": convention, "entries": entries}


def chi_from_json(obj) -> tuple[np.ndarray, str]:
    """Parse a chi JSON document, returning the matrix and its convention."""
    if not isinstance(obj, dict):
        raise ValueError("chi document must be a JSON object")
    dim = obj.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise ValueError(f"'dim' must be an integer >= 2, got {dim!r}")
    convention = obj.get("convention")
    if convention not in (CHI_CONVENTION, PAULI_CONVENTION):
        raise ValueError(f"unknown chi convention {convention!r}")
    entries = obj.get("entries")
    if not isinstance(entries, list) or len(entries) != dim**4:
        raise ValueError(f"'entries' must list {dim**4} [re, im] pairs")
    values = []
    for entry in entries:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ValueError(f"chi entry must be a [re, im] pair, got {entry!r}")
        values.append(complex(entry[0], entry[1]))
    chi = np.array(values, dtype=complex).reshape(dim * dim, dim * dim)
    return chi, convention
