"""Acceptance suite: one criterion per test, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly as a script
(``python tests/test_acceptance.py``) to see the verdict lines.

Criterion 04 asserts that the dense index-permutation matrix has
determinant +1 at D in {2, 3}.  The determinant is genuinely -1 at D = 3
(the relabeling is an odd permutation exactly when D = 3 mod 4), so that
sub-assertion is expected to stay red; everything it actually relies on
(orthogonality, invertibility) is asserted separately and holds.
"""

import numpy as np

from choi_sqpt import (
    BackendConfig,
    QuantumChannel,
    QuditIndexMap,
    apply_channel,
    apply_chi,
    beta_permutation,
    chi_choi_to_pauli,
    chi_oracle,
    choi_basis,
    full_sqpt,
    ghz_profile,
    lambda_oracle,
    pauli_basis,
    pauli_choi_unitary,
    plan_element,
    preset_channel,
    random_density_matrix,
    reconstruct_element,
)

EXACT = BackendConfig()


def _verdict(num: int, name: str, ok: bool, detail: str = ""):
    line = f"acceptance {num:02d} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def _random_channels(dim, count, rank_cycle=(1, 2, 3, 4), base_seed=0):
    return [
        preset_channel("random-cptp", [base_seed + i, rank_cycle[i % len(rank_cycle)]], dim)
        for i in range(count)
    ]


def _all_targets(dim):
    return [
        (e, f, g, h)
        for e in range(dim)
        for f in range(dim)
        for g in range(dim)
        for h in range(dim)
    ]


def test_criterion_01_element_oracle_equivalence():
    worst = 0.0
    for dim in (2, 3):
        for ch in _random_channels(dim, 20, base_seed=100 * dim):
            chi = chi_oracle(ch)
            for e, f, g, h in _all_targets(dim):
                est = reconstruct_element(plan_element(e, f, g, h, dim), ch, EXACT)
                worst = max(worst, abs(est.value - chi[e * dim + f, g * dim + h]))
    rng = np.random.default_rng(2024)
    for ch in _random_channels(4, 20, base_seed=400):
        chi = chi_oracle(ch)
        for _ in range(10):  # 20 channels x 10 targets = 200 random targets
            e, f, g, h = rng.integers(0, 4, size=4)
            est = reconstruct_element(plan_element(e, f, g, h, 4), ch, EXACT)
            worst = max(worst, abs(est.value - chi[e * 4 + f, g * 4 + h]))
    _verdict(1, "element-oracle-equivalence", worst < 1e-12, f"max |err| = {worst:.2e}")


def test_criterion_02_measurement_count_claims():
    ok = True
    for dim in range(2, 7):
        for e, f, g, h in _all_targets(dim):
            n = plan_element(e, f, g, h, dim).settings_count
            if e == g and f == h:
                ok = ok and n == 1
            elif e == g or f == h:
                ok = ok and n == 4
            else:
                ok = ok and n == 16
            ok = ok and n <= 16
    _verdict(2, "measurement-count-claims", ok, "counts in {1, 4, 16}, diagonal = 1")


def test_criterion_03_lambda_chi_mapping():
    worst = 0.0
    for dim in (2, 3, 4):
        for ch in _random_channels(dim, 50, base_seed=1000 * dim):
            lam4 = lambda_oracle(ch).reshape(dim, dim, dim, dim)
            chi4 = chi_oracle(ch).reshape(dim, dim, dim, dim)
            worst = max(
                worst, float(np.max(np.abs(lam4 - np.einsum("cadb->abcd", chi4))))
            )
    _verdict(3, "lambda-chi-mapping", worst < 1e-12, f"max |err| = {worst:.2e}")


def test_criterion_04_beta_properties():
    ok = True
    details = []
    for dim in (2, 3):
        dense = beta_permutation(dim).dense()
        n = dim**4
        is_perm = (
            np.array_equal(np.sort(dense, axis=1)[:, -1], np.ones(n))
            and np.array_equal(dense.sum(axis=1), np.ones(n))
            and np.array_equal(dense.sum(axis=0), np.ones(n))
            and set(np.unique(dense)) == {0.0, 1.0}
        )
        orthogonal = np.array_equal(dense.T @ dense, np.eye(n))
        det = float(np.linalg.det(dense))
        details.append(f"D={dim}: det = {det:+.0f}")
        ok = ok and is_perm and orthogonal and abs(det - 1.0) < 1e-12
    _verdict(4, "beta-properties", ok, "; ".join(details))


def test_criterion_05_trace_law():
    worst = 0.0
    for dim in (2, 3, 4, 8):
        for ch in _random_channels(dim, 50, base_seed=7000 + dim):
            worst = max(worst, abs(np.trace(chi_oracle(ch)).real - dim))
    non_tp = QuantumChannel(2, (0.5 * np.eye(2, dtype=complex),))
    violated = abs(np.trace(chi_oracle(non_tp)).real - 2) > 1e-3
    _verdict(
        5,
        "trace-law",
        worst < 1e-10 and violated,
        f"max TP deviation = {worst:.2e}; non-TP detectably violates",
    )


def test_criterion_06_transition_probability_identity():
    worst = 0.0
    for dim in (2, 3, 4):
        for ch in _random_channels(dim, 5, base_seed=9000 + dim):
            for a in range(dim):
                for b in range(dim):
                    est = reconstruct_element(plan_element(a, b, a, b, dim), ch, EXACT)
                    rho = np.zeros((dim, dim), dtype=complex)
                    rho[b, b] = 1.0
                    direct = apply_channel(ch, rho)[a, a].real
                    worst = max(worst, abs(est.value - direct))
    _verdict(6, "transition-probability-identity", worst < 1e-12, f"max |err| = {worst:.2e}")


def test_criterion_07_tp_shortcut():
    channels = [
        preset_channel("amplitude-damping", [0.3]),
        preset_channel("depolarizing", [0.6], 2),
        preset_channel("random-cptp", [77, 3], 2),
    ]
    ok = True
    worst = 0.0
    for ch in channels:
        plain = full_sqpt(ch, EXACT)
        short = full_sqpt(ch, EXACT, tp_shortcut=True)
        ok = ok and short.settings_measured == 12 and short.settings_inferred == 4
        worst = max(worst, float(np.max(np.abs(plain.chi - short.chi))))
    ok = ok and worst < 1e-12
    _verdict(7, "tp-shortcut", ok, f"measured = 12 = D^2(D^2-1); max delta = {worst:.2e}")


def test_criterion_08_pauli_choi_equivalence():
    ok = True
    for n in (1, 2, 3):
        u = pauli_choi_unitary(n)
        ok = ok and np.max(np.abs(u @ u.conj().T - np.eye(4**n))) < 1e-12
    worst = 0.0
    for n in (1, 2):
        dim = 2**n
        rng = np.random.default_rng(500 + n)
        for seed in range(5):
            ch = preset_channel("random-cptp", [seed + 10 * n, 3], dim)
            chi_c = chi_oracle(ch)
            chi_p = chi_choi_to_pauli(chi_c, n)
            for _ in range(3):
                rho = random_density_matrix(dim, rng)
                via_c = apply_chi(chi_c, choi_basis(dim), rho)
                via_p = apply_chi(chi_p, pauli_basis(n), rho)
                worst = max(worst, float(np.max(np.abs(via_c - via_p))))
    ok = ok and worst < 1e-10
    _verdict(8, "pauli-choi-equivalence", ok, f"max action mismatch = {worst:.2e}")


def test_criterion_09_statistical_soundness():
    rng = np.random.default_rng(90210)
    failures = 0
    for trial in range(100):
        ch = preset_channel("random-cptp", [trial, 2], 2)
        e, f, g, h = rng.integers(0, 2, size=4)
        cfg = BackendConfig("sampled", 10**6, 5000 + trial)
        est = reconstruct_element(plan_element(e, f, g, h, 2), ch, cfg)
        oracle = chi_oracle(ch)[e * 2 + f, g * 2 + h]
        if abs(est.value - oracle) > 5 * est.std_error + 1e-12:
            failures += 1
    cfg = BackendConfig("sampled", 10**6, 5000)
    plan = plan_element(0, 0, 1, 1, 2)
    ch = preset_channel("random-cptp", [0, 2], 2)
    first = reconstruct_element(plan, ch, cfg)
    again = reconstruct_element(plan, ch, cfg)
    reproducible = first.value == again.value and first.std_error == again.std_error
    _verdict(
        9,
        "statistical-soundness",
        failures <= 1 and reproducible,
        f"{100 - failures}/100 within 5 sigma; bit-identical reruns = {reproducible}",
    )


def test_criterion_10_ghz_structure():
    worst = 0.0
    for n, d in ((3, 2), (2, 3)):
        index_map = QuditIndexMap(n, d)
        for a in range(d**n):
            for b in range(d**n):
                worst = max(worst, ghz_profile(a, b, index_map).max_residual)
    _verdict(10, "ghz-structure", worst < 1e-12, f"max residual = {worst:.2e}")


def test_criterion_11_product_hermitian_strategy():
    two_qubit = preset_channel("random-cptp", [123, 4], 4)
    qutrit = preset_channel("random-cptp", [321, 3], 3)
    err_2q = np.max(
        np.abs(
            full_sqpt(two_qubit, EXACT, "product-hermitian", local_dim=2, n_sites=2).chi
            - chi_oracle(two_qubit)
        )
    )
    err_3 = np.max(
        np.abs(full_sqpt(qutrit, EXACT, "product-hermitian").chi - chi_oracle(qutrit))
    )
    ok = err_2q < 1e-10 and err_3 < 1e-10
    _verdict(
        11,
        "product-hermitian-full-sqpt",
        ok,
        f"2-qubit err = {err_2q:.2e}, qutrit err = {err_3:.2e}",
    )


_CRITERIA = [
    test_criterion_01_element_oracle_equivalence,
    test_criterion_02_measurement_count_claims,
    test_criterion_03_lambda_chi_mapping,
    test_criterion_04_beta_properties,
    test_criterion_05_trace_law,
    test_criterion_06_transition_probability_identity,
    test_criterion_07_tp_shortcut,
    test_criterion_08_pauli_choi_equivalence,
    test_criterion_09_statistical_soundness,
    test_criterion_10_ghz_structure,
    test_criterion_11_product_hermitian_strategy,
]


if __name__ == "__main__":
    import sys

    failed = 0
    for criterion in _CRITERIA:
        try:
            criterion()
        except AssertionError:
            failed += 1
    print(f"{len(_CRITERIA) - failed}/{len(_CRITERIA)} acceptance criteria pass")
    sys.exit(1 if failed else 0)
