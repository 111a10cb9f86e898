import math

import numpy as np
import pytest

from torusrd import bdchain
from torusrd.errors import DivergentTail, Extinct, NotExploded
from torusrd.model import ModelParams, make_rate
from torusrd.rng import stream
from torusrd.simulate import (ParticleConfig, SimOutcome,
                              coupled_domination_run, coupled_truncation_run,
                              estimate_explosion_time, simulate, step)


def flat(x):
    return np.ones_like(x)


def params(n, ell, b, d, phi=flat, **kw):
    return ModelParams(n=n, ell=ell, b=make_rate(b), d=make_rate(d), phi=phi, **kw)


class TestStep:
    def test_total_rate_worked_example(self):
        # eta = (3, 1), N=2, ell=2, b=u^2, d=u: jumps 32, births 5, deaths 4
        p = params(2, 2, "power:2", "linear:1",
                   phi=lambda x: np.where(np.asarray(x) < 0.25, 1.5, 0.5))
        cfg = ParticleConfig.from_params(p)
        assert np.array_equal(cfg.counts, [3, 1])
        assert cfg.tree.total == pytest.approx(41.0)

    def test_extinct_when_rates_vanish(self):
        p = params(2, 1, "zero", "zero", phi=lambda x: np.zeros_like(x))
        cfg = ParticleConfig.from_params(p)
        with pytest.raises(Extinct):
            step(cfg, p, stream(0))

    def test_two_torus_jump_lands_on_other_site(self):
        p = params(2, 1, "zero", "zero",
                   phi=lambda x: (np.atleast_1d(x) == 0.0).astype(float))
        cfg = ParticleConfig.from_params(p)
        assert np.array_equal(cfg.counts, [1, 0])
        step(cfg, p, stream(1))
        assert np.array_equal(cfg.counts, [0, 1])

    def test_matches_kernel_trajectory(self):
        # same stream, same uniform order: python steps and the compiled
        # kernel must visit the identical configuration at a sample time
        p = params(4, 4, "power:2", "linear:1")
        out = simulate(p, 0.05, 50.0, [0.05], stream(21, 0))
        snap = out.snapshots[0][1]
        cfg = ParticleConfig.from_params(p)
        rng = stream(21, 0)
        prev = cfg.counts.copy()
        while cfg.time < 0.05:
            prev = cfg.counts.copy()
            step(cfg, p, rng)
        assert np.array_equal(snap, prev)

    def test_rate_cache_coherent_after_many_events(self):
        p = params(8, 4, "linear:1", "linear:1")
        cfg = ParticleConfig.from_params(p)
        rng = stream(22)
        for _ in range(100_000):
            try:
                step(cfg, p, rng)
            except Extinct:
                break
        assert np.array_equal(cfg.tree.tree, cfg.tree.rebuild())

    def test_jump_direction_symmetry(self):
        p = params(8, 8, "zero", "zero")
        cfg = ParticleConfig.from_params(p)
        rng = stream(23)
        kinds = [step(cfg, p, rng).kind for _ in range(20_000)]
        rights = kinds.count("jump_right")
        n = len(kinds)
        assert abs(rights - n / 2) <= 3.0 * math.sqrt(n * 0.25)


class TestSimulate:
    def test_pure_diffusion_conserves_total(self):
        p = params(8, 8, "zero", "zero")
        out = simulate(p, 0.3, 50.0, [0.1, 0.2, 0.3], stream(30))
        assert out.final_counts.sum() == 64
        for _, snap in out.snapshots:
            assert snap.sum() == 64

    def test_extinction_time_order_statistics(self):
        # two unit-rate deaths: E[max of two exponentials] = 3/2
        p = params(2, 1, "zero", "linear:1")
        vals = []
        for i in range(10_000):
            out = simulate(p, 1e9, 50.0, (), stream(31, i))
            vals.append(out.extinct_at)
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - 1.5) <= 3.0 * se

    def test_explosion_flag_for_superlinear_birth(self):
        p = params(32, 32, "power:2", "zero")
        out = simulate(p, 10.0, 50.0, (), stream(32))
        assert out.exploded
        assert out.final_time < 10.0

    def test_threshold_hits_nondecreasing(self):
        p = params(16, 16, "power:2", "zero")
        out = simulate(p, 10.0, 50.0, (), stream(33))
        ms = sorted(out.threshold_hits_sup)
        hits = [out.threshold_hits_sup[m] for m in ms]
        assert all(a <= b for a, b in zip(hits, hits[1:]))
        assert all(out.threshold_hits_total.get(m, math.inf) >=
                   out.threshold_hits_sup[m] for m in ms)

    def test_deterministic_given_seed(self):
        p = params(8, 8, "power:2", "linear:1")
        a = simulate(p, 0.2, 50.0, [0.1, 0.2], stream(34))
        b = simulate(p, 0.2, 50.0, [0.1, 0.2], stream(34))
        assert a.events_processed == b.events_processed
        assert a.final_time == b.final_time
        assert all(np.array_equal(x[1], y[1])
                   for x, y in zip(a.snapshots, b.snapshots))
        assert a.threshold_hits_sup == b.threshold_hits_sup


class TestExplosionEstimate:
    def outcome(self, m_stop=50.0, t_hit=0.9):
        return SimOutcome(threshold_hits_sup={m_stop: t_hit}, exploded=True,
                          m_stop=m_stop)

    def test_inverse_square_correction(self):
        t_raw, t_est = estimate_explosion_time(self.outcome(),
                                               make_rate("power:2"), None)
        assert t_raw == 0.9
        assert t_est == pytest.approx(0.9 + 0.02, rel=1e-9)

    def test_inverse_cube_correction(self):
        _, t_est = estimate_explosion_time(self.outcome(),
                                           make_rate("power:3"), None)
        assert t_est == pytest.approx(0.9 + 2e-4, rel=1e-9)

    def test_linear_birth_divergent(self):
        with pytest.raises(DivergentTail):
            estimate_explosion_time(self.outcome(), make_rate("linear:1"), None)

    def test_not_exploded(self):
        out = SimOutcome(exploded=False, m_stop=50.0)
        with pytest.raises(NotExploded):
            estimate_explosion_time(out, make_rate("power:2"), None)


class TestTruncationCoupling:
    def test_no_divergence_below_threshold(self):
        p = params(16, 16, "power:2", "zero")
        full, trunc, div = coupled_truncation_run(p, 5.0, 0.3, seed=40)
        assert div is None
        assert all(np.array_equal(a[1], b[1])
                   for a, b in zip(full.snapshots, trunc.snapshots))

    def test_divergence_only_past_coupling_time(self):
        # push well past the truncation edge; any split must come at or
        # after the density-(m + 1/2) hitting time
        p = params(16, 16, "power:2", "zero")
        full, trunc, div = coupled_truncation_run(
            p, 2.0, 5.0, seed=41, sample_times=np.linspace(0.0, 5.0, 257))
        t_couple = trunc.threshold_hits_sup.get(2.5, math.inf)
        if div is not None:
            assert div >= t_couple
        assert full.exploded  # untruncated u^2 births must blow up

    def test_truncated_partner_never_explodes(self):
        p = params(16, 16, "power:2", "zero")
        _, trunc, _ = coupled_truncation_run(p, 2.0, 5.0, seed=42,
                                             m_stop=40.0)
        assert not trunc.exploded


class TestDominationCoupling:
    def test_bounded_death_dominated(self):
        p = params(4, 4, "power:2+bounded:1", "bounded:1")
        for i in range(10):
            _, ytraj, dominated = coupled_domination_run(
                p, y0=16, t_end=1e9, rng=stream(50, i), y_cap=64)
            assert dominated
            assert ytraj.final <= 64

    def test_linear_death_dominated(self):
        p = params(4, 4, "power:2+linear:1", "linear:1")
        for i in range(10):
            _, _, dominated = coupled_domination_run(
                p, y0=16, t_end=1e9, rng=stream(51, i), y_cap=64)
            assert dominated

    def test_y0_above_total_rejected(self):
        p = params(2, 2, "power:2", "zero")
        with pytest.raises(ValueError):
            coupled_domination_run(p, y0=100, t_end=1.0, rng=stream(52))

    def test_pure_birth_y_marginal_matches_chain_analytics(self):
        # d = 0: Y is the pure-birth chain with rates ell N b(r / ell N);
        # its passage ell N -> 2 ell N must match the recursion value
        p = params(16, 16, "power:2", "zero")
        ln = 256
        spec = bdchain.BirthDeathSpec.from_model(
            ModelParams(n=16, ell=16, b=make_rate("power:2"),
                        d=make_rate("zero"), phi=flat))
        ht = bdchain.expected_hitting_times(spec, 2 * ln, floor=1)
        target = float(ht.f[ln:2 * ln].sum())
        vals = []
        for i in range(200):
            _, ytraj, dominated = coupled_domination_run(
                p, y0=ln, t_end=1e9, rng=stream(53, i), y_cap=2 * ln)
            assert dominated
            assert ytraj.hit_time is not None
            vals.append(ytraj.hit_time)
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - target) <= 3.0 * se
