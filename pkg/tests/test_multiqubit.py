import math

import numpy as np
import pytest

from probtele.multiqubit import (
    ChannelBank,
    MeasurementBank,
    MultiInput,
    initial_state,
    multi_success_probability,
    multi_teleport_exact,
)
from probtele.protocol import InputQubit, MeasurementFamily, success_probability, teleport_exact
from probtele.schmidt import SchmidtPair
from probtele.statevec import project, ket

S2 = 1 / math.sqrt(2)


def random_banks(rng, k):
    b2 = rng.uniform(0, 0.5, size=k)
    bp2 = rng.uniform(0, 0.5, size=k)
    return ChannelBank.from_b2(b2), MeasurementBank.from_b2(bp2), b2, bp2


class TestClosedForm:
    def test_k1_reduces(self):
        ch, f = SchmidtPair.from_b2(0.3), MeasurementFamily.from_b2(0.2)
        assert multi_success_probability(ChannelBank((ch,)), MeasurementBank((f,))) == success_probability(ch, f)

    def test_two_pairs_bell(self):
        p = multi_success_probability(ChannelBank.from_b2([0.2, 0.2]), MeasurementBank.from_b2([0.5, 0.5]))
        assert p == pytest.approx(0.16, abs=1e-12)

    def test_zero_pair_annihilates(self):
        p = multi_success_probability(ChannelBank.from_b2([0.0, 0.4]), MeasurementBank.from_b2([0.5, 0.5]))
        assert p == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            multi_success_probability(ChannelBank.from_b2([0.2]), MeasurementBank.from_b2([0.5, 0.5]))

    def test_sixteen_pairs(self):
        p = multi_success_probability(ChannelBank.from_b2([0.5] * 16), MeasurementBank.from_b2([0.5] * 16))
        assert p == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            ChannelBank.from_b2([0.5] * 17)


class TestLayout:
    def test_register_order(self):
        # input |1> on P_1, channel a|00> + b|11> on (A_1, B_1)
        ch = ChannelBank.from_b2([0.2])
        psi = initial_state(MultiInput(np.array([0, 1])), ch)
        expected = math.sqrt(0.8) * ket("100").amps + math.sqrt(0.2) * ket("111").amps
        np.testing.assert_allclose(psi.amps, expected, atol=1e-15)

    def test_two_pair_layout(self):
        ch = ChannelBank.from_b2([0.0, 0.0])
        q = MultiInput(ket("01").amps)
        psi = initial_state(q, ch)
        # [P1, P2, A1, A2, B1, B2]: only P2 is set
        np.testing.assert_allclose(psi.amps, ket("010000").amps)

    def test_channel_pair_in_place(self):
        ch = ChannelBank.from_b2([0.0, 0.3])
        psi = initial_state(MultiInput(ket("00").amps), ch)
        res, w = project(psi, [0, 1, 2, 4], ket("0000"))
        # remaining (A2, B2) hold the second channel pair
        np.testing.assert_allclose(res.amps, [math.sqrt(0.7), 0, 0, math.sqrt(0.3)], atol=1e-15)


class TestFullVector:
    def test_k1_matches_single_protocol(self, rng):
        for _ in range(10):
            q = InputQubit.random(rng)
            b2, bp2 = rng.uniform(0, 0.5, size=2)
            ch, f = SchmidtPair.from_b2(b2), MeasurementFamily.from_b2(bp2)
            single = teleport_exact(q, ch, f)
            multi = multi_teleport_exact(q, ch, f)
            for m in range(1, 5):
                assert multi.contributions[(m,)] == pytest.approx(single.contributions[m - 1], abs=1e-12)

    def test_entangled_input_two_pairs(self):
        q = MultiInput(np.array([S2, 0, 0, S2]))
        r = multi_teleport_exact(q, ChannelBank.from_b2([0.2, 0.2]), MeasurementBank.from_b2([0.5, 0.5]))
        assert r.total == pytest.approx(0.16, abs=1e-10)
        assert r.fidelity == pytest.approx(1.0, abs=1e-9)
        assert len(r.contributions) == 16

    def test_mixed_limits(self, rng):
        ch = ChannelBank.from_b2([0.3, 0.1])
        mb = MeasurementBank.from_b2([0.2, 0.5])
        assert multi_success_probability(ch, mb) == pytest.approx(0.08, abs=1e-12)
        r = multi_teleport_exact(MultiInput.random(2, rng), ch, mb)
        assert r.total == pytest.approx(0.08, abs=1e-10)

    def test_product_law_random(self, rng):
        for k in (1, 2, 3):
            for _ in range(5 if k == 3 else 15):
                ch, mb, _, _ = random_banks(rng, k)
                r = multi_teleport_exact(MultiInput.random(k, rng), ch, mb)
                assert r.total == pytest.approx(multi_success_probability(ch, mb), abs=1e-10)
                assert sum(r.outcome_weights.values()) == pytest.approx(1.0, abs=1e-9)

    def test_input_independence(self, rng):
        ch, mb, _, _ = random_banks(rng, 2)
        totals = [multi_teleport_exact(MultiInput.random(2, rng), ch, mb).total for _ in range(20)]
        totals.append(multi_teleport_exact(MultiInput(np.array([S2, 0, 0, S2])), ch, mb).total)
        assert max(totals) - min(totals) <= 1e-12

    def test_factorization(self, rng):
        for _ in range(10):
            ch, mb, _, _ = random_banks(rng, 2)
            qubits = [InputQubit.random(rng) for _ in range(2)]
            r = multi_teleport_exact(MultiInput.product(qubits), ch, mb)
            singles = [teleport_exact(q, c, f).total for q, c, f in zip(qubits, ch.pairs, mb.families)]
            assert r.total == pytest.approx(np.prod(singles), abs=1e-12)

    def test_k_limit(self, rng):
        ch = ChannelBank.from_b2([0.5] * 4)
        mb = MeasurementBank.from_b2([0.5] * 4)
        with pytest.raises(ValueError, match="k <= 3"):
            multi_teleport_exact(MultiInput.random(4, rng), ch, mb)
