import itertools
import logging
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dense_oracle import (enumerate_configurations, exact_distribution, exponent_of,
                          string_element, symbolic_weight)
from stabsse import kernels
from stabsse.engine import (IDENTITY, Configuration, estimate_error, evaluate_bits,
                            evaluate_matrix_element, insertion_ratio, mc_cycle,
                            propose_operator_update, propose_state_update, removal_ratio,
                            run_schedule, state_ratio, temperature_grid)
from stabsse.errors import EstimationError
from stabsse.models import build_cnot_chain, build_field_only, build_tfi_chain
from stabsse.stabilizer import MatrixElement


# -- matrix elements ---------------------------------------------------------

def test_identity_string_has_unit_weight():
    cat = build_cnot_chain(3, 4.0, 1.0)
    for bits in range(8):
        assert evaluate_bits(cat, bits, [IDENTITY] * 5) == MatrixElement(0)


def test_worked_example_and_zero():
    cnot = build_cnot_chain(2, 4.0, 1.0)
    assert evaluate_matrix_element(cnot, (1, 1), [0, 2]).value == 0.5
    tfi = build_tfi_chain(2, 1.0, 1.0)
    assert evaluate_matrix_element(tfi, (1, -1), [0]).is_zero
    with pytest.raises(ValueError):
        evaluate_matrix_element(cnot, (1,), [0])


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["cnot", "tfi"]), st.integers(0, 31),
       st.lists(st.integers(-1, 9), min_size=12, max_size=12))
def test_random_strings_match_dense(model, bits, ops):
    cat = build_cnot_chain(5, 4.0, 1.0) if model == "cnot" else build_tfi_chain(5, 3.0, 1.0)
    assert evaluate_bits(cat, bits, ops).exponent == exponent_of(string_element(cat, bits, ops))


# -- acceptance ratios -------------------------------------------------------

def test_state_ratio_examples():
    assert state_ratio(MatrixElement(3), MatrixElement(3)) == 1.0
    assert state_ratio(MatrixElement.zero(), MatrixElement(3)) == 0.0
    assert state_ratio(MatrixElement(4), MatrixElement(2)) == 0.5


def test_zero_weight_insertion_rejected():
    assert insertion_ratio(1.0, 10.0, 4, 0, MatrixElement.zero(), MatrixElement(0)) == 0.0
    assert removal_ratio(1.0, 10.0, 4, 1, MatrixElement.zero(), MatrixElement(0)) == 0.0


class Surd:
    """Exact ``q * sqrt(2)**r`` with rational q >= 0 and r in {0, 1}."""

    def __init__(self, q, r=0):
        self.q, self.r = Fraction(q), r % 2
        self.q *= 2 ** (r // 2) if r >= 0 else Fraction(1, 2 ** (-(r // 2)))

    @classmethod
    def weight(cls, sym):
        pref, k = sym
        return cls(pref * Fraction(1, 2 ** (k // 2)), -(k % 2))

    def __mul__(self, o):
        return Surd(self.q * o.q, self.r + o.r)

    def __truediv__(self, o):
        return Surd(self.q / o.q, self.r - o.r)

    def _sq(self):
        return self.q * self.q * 2 ** self.r

    def __lt__(self, o):
        return self._sq() < o._sq()

    def __eq__(self, o):
        return self._sq() == o._sq()

    def __float__(self):
        return float(self.q) * math.sqrt(2) ** self.r


def _min1(x):
    one = Surd(1)
    return one if one < x else x


def test_detailed_balance_exact():
    beta, h, J = Fraction(1, 2), Fraction(4), Fraction(1)
    cat = build_cnot_chain(2, float(h), float(J))
    total = Fraction(cat.total_coupling)
    L = 2
    sym = {c: symbolic_weight(cat, beta, *c) for c in enumerate_configurations(cat, L)}
    live = {c: s for c, s in sym.items() if s is not None}
    pairs = 0
    for (bits, ops), s in live.items():
        w = Surd.weight(s)
        n = sum(k >= 0 for k in ops)
        # basis-state moves: symmetric proposal, Metropolis on the matrix element
        for bits2 in range(4):
            c2 = (bits2, ops)
            if c2 not in live or bits2 == bits:
                continue
            w2 = Surd.weight(live[c2])
            assert w * _min1(w2 / w) == w2 * _min1(w / w2)
            got = state_ratio(MatrixElement(live[c2][1]), MatrixElement(s[1]))
            assert got == pytest.approx(float(w2 / w), rel=1e-14)
            pairs += 1
        # slot moves: identity -> term k with proposal c_k / C
        for p in range(L):
            if ops[p] != IDENTITY:
                continue
            for k, term in enumerate(cat.terms):
                ops2 = ops[:p] + (k,) + ops[p + 1:]
                c2 = (bits, ops2)
                if c2 not in live:
                    continue
                w2 = Surd.weight(live[c2])
                q_fwd = Surd(Fraction(term.coupling) / total)
                ratio = w2 / (w * q_fwd)
                forward = w * q_fwd * _min1(ratio)
                backward = w2 * _min1(Surd(1) / ratio)
                assert forward == backward
                eng_in = insertion_ratio(float(beta), float(total), L, n,
                                         MatrixElement(live[c2][1]), MatrixElement(s[1]))
                eng_out = removal_ratio(float(beta), float(total), L, n + 1,
                                        MatrixElement(s[1]), MatrixElement(live[c2][1]))
                assert eng_in == pytest.approx(float(ratio), rel=1e-14)
                assert eng_out == pytest.approx(1.0 / float(ratio), rel=1e-14)
                pairs += 1
    assert pairs > 50


def _cycle_matrix(cat, beta, L, flip=False):
    keys = sorted(exact_distribution(cat, beta, L))
    index = {c: i for i, c in enumerate(keys)}
    dim, nq = len(keys), cat.n_qubits
    total = cat.total_coupling
    weight = {c: evaluate_bits(cat, *c) for c in keys}

    def step(move):
        m = np.zeros((dim, dim))
        for c in keys:
            i = index[c]
            for c2, prob in move(c):
                m[i, index[c2]] += prob
            m[i, i] += 1.0 - m[i].sum()
        return m

    def state_move(c):
        bits, ops = c
        targets = ([bits ^ (1 << s) for s in range(nq)] if flip else range(1 << nq))
        q = 1.0 / len(targets)
        for b2 in targets:
            if b2 == bits:
                continue
            w2 = evaluate_bits(cat, b2, ops)
            if not w2.is_zero:
                yield (b2, ops), q * min(1.0, state_ratio(w2, weight[c]))

    def slot_move(p):
        def move(c):
            bits, ops = c
            n = sum(k >= 0 for k in ops)
            if ops[p] == IDENTITY:
                for k, t in enumerate(cat.terms):
                    c2 = (bits, ops[:p] + (k,) + ops[p + 1:])
                    if c2 in index:
                        r = insertion_ratio(beta, total, L, n, weight[c2], weight[c])
                        yield c2, t.coupling / total * min(1.0, r)
            else:
                c2 = (bits, ops[:p] + (IDENTITY,) + ops[p + 1:])
                if c2 in index:
                    r = removal_ratio(beta, total, L, n, weight[c2], weight[c])
                    yield c2, min(1.0, r)
        return move

    mats = [step(state_move)] + [step(slot_move(p)) for p in range(L)]
    return keys, np.linalg.multi_dot(mats) if len(mats) > 1 else mats[0]


@pytest.mark.parametrize("flip", [False, True])
@pytest.mark.parametrize("cat,beta,L", [(build_cnot_chain(2, 4.0, 1.0), 0.5, 2),
                                        (build_cnot_chain(2, 1.0, 1.0), 1.0, 2),
                                        (build_tfi_chain(2, 3.0, 1.0), 0.7, 2),
                                        (build_field_only(2, 1.0), 2.0, 3)])
def test_cycle_matrix_stationary(cat, beta, L, flip):
    keys, P = _cycle_matrix(cat, beta, L, flip)
    target = exact_distribution(cat, beta, L)
    pi = np.array([target[k] for k in keys])
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-13)
    assert P.min() >= 0
    np.testing.assert_allclose(pi @ P, pi, atol=1e-13)


def test_ergodicity_smoke():
    cat = build_cnot_chain(2, 4.0, 1.0)
    support = set(exact_distribution(cat, 0.5, 2))
    config = Configuration.initial(cat, 2)
    rng = np.random.default_rng(11)
    seen = set()
    for _ in range(20_000):
        kernels.run_cycles(config, cat, 0.5, 1, rng)
        seen.add((config.bits, tuple(int(k) for k in config.ops)))
    assert seen == support


# -- proposals and cycles ----------------------------------------------------

def test_state_update_with_identity_string_always_accepts():
    cat = build_cnot_chain(3, 4.0, 1.0)
    config = Configuration.initial(cat, 4)
    rng = np.random.default_rng(3)
    assert all(propose_state_update(config, cat, rng) for _ in range(50))


def test_state_update_never_accepts_zero_weight():
    cat = build_tfi_chain(3, 1.0, 1.0)
    config = Configuration(3, 0, np.array([0, 1, 2], dtype=np.int32), MatrixElement(0), 3)
    config.check(cat)
    rng = np.random.default_rng(4)
    for _ in range(200):
        propose_state_update(config, cat, rng)
        assert config.bits in (0, 7)
        config.check(cat)


def test_operator_update_bounds():
    cat = build_cnot_chain(2, 4.0, 1.0)
    config = Configuration.initial(cat, 3)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        propose_operator_update(config, cat, 3, 1.0, rng)
    with pytest.raises(ValueError):
        propose_operator_update(config, cat, -1, 1.0, rng)


def test_zero_length_cycle_is_state_update():
    cat = build_cnot_chain(3, 4.0, 1.0)
    config = Configuration.initial(cat, 0)
    rng = np.random.default_rng(8)
    ref = np.random.default_rng(8)
    accepted, ops = mc_cycle(config, cat, 1.0, rng, debug=True)
    assert accepted and ops == 0
    assert config.bits == int(ref.bit_generator.random_raw()) & 7


def test_configuration_check_detects_stale_cache():
    cat = build_cnot_chain(2, 4.0, 1.0)
    config = Configuration.initial(cat, 2)
    config.ops[1] = 2
    with pytest.raises(AssertionError):
        config.check(cat)


def _chain_states(runner, cat, L, beta, cycles, seed, flip):
    config = Configuration.initial(cat, L)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(cycles):
        runner(config, rng)
        out.append((config.bits, tuple(config.ops.tolist()), config.weight, config.n))
    config.check(cat)
    return out


@pytest.mark.parametrize("flip", [False, True])
@pytest.mark.parametrize("cat,L,beta", [(build_cnot_chain(4, 4.0, 1.0), 12, 1.3),
                                        (build_tfi_chain(5, 3.0, 1.0), 10, 0.8)])
def test_backends_produce_identical_chains(cat, L, beta, flip):
    ref = _chain_states(lambda c, r: mc_cycle(c, cat, beta, r, flip=flip, debug=True),
                        cat, L, beta, 150, 99, flip)
    for backend in kernels.available_backends():
        got = _chain_states(
            lambda c, r: kernels.run_cycles(c, cat, beta, 1, r, flip=flip, backend=backend),
            cat, L, beta, 150, 99, flip)
        assert got == ref, backend


def test_kernel_multi_cycle_matches_single_steps():
    cat = build_cnot_chain(6, 4.0, 1.0)
    for backend in kernels.available_backends():
        a = Configuration.initial(cat, 16)
        trace = np.zeros(40, dtype=np.int64)
        s_acc, o_acc = kernels.run_cycles(a, cat, 0.9, 40, np.random.default_rng(5),
                                          n_trace=trace, backend=backend)
        b = Configuration.initial(cat, 16)
        rng = np.random.default_rng(5)
        ns, s2, o2 = [], 0, 0
        for _ in range(40):
            s, o = kernels.run_cycles(b, cat, 0.9, 1, rng, backend=backend)
            s2, o2 = s2 + s, o2 + o
            ns.append(b.n)
        assert trace.tolist() == ns and (s_acc, o_acc) == (s2, o2)
        assert a.bits == b.bits and a.ops.tolist() == b.ops.tolist()
        a.check(cat)


def test_backend_selection():
    assert "python" in kernels.available_backends()
    assert kernels.select_backend(None, "python") == "python"
    with pytest.raises(ValueError):
        kernels.select_backend(None, "fortran")
    wide = build_field_only(70, 1.0)
    assert kernels.select_backend(wide, None) == "python"


def test_wide_register_uses_fallback():
    cat = build_field_only(70, 1.0)
    config = Configuration.initial(cat, 6)
    kernels.run_cycles(config, cat, 1.0, 20, np.random.default_rng(1))
    config.check(cat)


# -- measurement -------------------------------------------------------------

def test_estimate_error_constant_and_errors():
    assert estimate_error(np.full(1000, 3.5), 50) == 0.0
    with pytest.raises(EstimationError):
        estimate_error(np.arange(10.0), 1)
    with pytest.raises(EstimationError):
        estimate_error(np.arange(99.0), 50)


def test_estimate_error_iid_normal():
    rng = np.random.default_rng(2024)
    n, sigma = 10_000, 2.0
    est = [estimate_error(rng.normal(0.0, sigma, n), 50) for _ in range(100)]
    assert np.mean(est) == pytest.approx(sigma / math.sqrt(n), rel=0.2)


def test_estimate_error_drops_remainder():
    data = np.r_[np.tile([0.0, 1.0], 50), [1e9]]
    assert estimate_error(data, 50) == 0.0


def test_temperature_grid():
    grid = temperature_grid(10.0, 0.4, 0.4)
    assert len(grid) == 25 and grid[0] == 10.0 and grid[-1] == 0.4
    assert temperature_grid(1.0, 0.5, 2.0) == [1.0]
    with pytest.raises(ValueError):
        temperature_grid(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        temperature_grid(1.0, 0.5, 0.0)


def test_run_schedule_estimator_and_determinism():
    cat = build_cnot_chain(4, 4.0, 1.0)
    a = run_schedule(cat, 20, [2.0, 1.0], 100, 400, seed=17)
    b = run_schedule(cat, 20, [2.0, 1.0], 100, 400, seed=17)
    assert a == b
    for r in a.records:
        assert r.energy == -r.mean_n / r.beta
        assert 0 <= r.state_accept_rate <= 1 and 0 <= r.op_accept_rate <= 1
        assert r.energy_stderr >= 0


def test_infinite_temperature_limit():
    cat = build_cnot_chain(3, 1e-9, 1e-9)
    res = run_schedule(cat, 10, [1e8], 10, 200, seed=1)
    assert res.records[0].mean_n == 0.0 and res.records[0].energy == 0.0


def test_run_schedule_validation():
    cat = build_cnot_chain(2, 4.0, 1.0)
    with pytest.raises(ValueError):
        run_schedule(cat, 5, [1.0, 0.0], 1, 10)
    with pytest.raises(ValueError):
        run_schedule(cat, 0, [1.0], 1, 10)
    with pytest.raises(ValueError):
        run_schedule(cat, 5, [1.0], 1, 0)


def test_cutoff_warning(caplog):
    cat = build_cnot_chain(4, 4.0, 1.0)
    with caplog.at_level(logging.WARNING, logger="stabsse.engine"):
        run_schedule(cat, 4, [0.5], 50, 200, seed=2)
    assert "cutoff" in caplog.text


def test_small_chain_energy_matches_enumeration():
    cat = build_cnot_chain(2, 4.0, 1.0)
    beta, L = 0.5, 3
    dist = exact_distribution(cat, beta, L)
    exact_n = sum(p * sum(k >= 0 for k in ops) for (bits, ops), p in dist.items())
    res = run_schedule(cat, L, [1 / beta], 2000, 100_000, seed=31)
    rec = res.records[0]
    assert abs(rec.mean_n - exact_n) < 4 * rec.energy_stderr * beta


def test_all_configurations_enumerated():
    cat = build_cnot_chain(2, 4.0, 1.0)
    assert sum(1 for _ in enumerate_configurations(cat, 2)) == 4 * 5 ** 2
    assert len(list(itertools.islice(enumerate_configurations(cat, 1), 7))) == 7


def test_desk_scale_throughput():
    if "compiled" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    cat = build_cnot_chain(10, 4.0, 1.0)
    config = Configuration.initial(cat, 40)
    t0 = time.perf_counter()
    kernels.run_cycles(config, cat, 2.5, 100_000, np.random.default_rng(0))
    assert time.perf_counter() - t0 < 60.0
    config.check(cat)
