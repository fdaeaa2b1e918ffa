import numpy as np
import pytest

from unilite.envcore import (
    BackendCapabilities,
    DRConfig,
    ResetPayload,
    TaskConfig,
    build_interval_plan,
    materialize,
    sample_reset_payload,
)
from unilite.envcore.rng import env_streams


def pointmass_task(**overrides) -> TaskConfig:
    dr = overrides.pop("dr", DRConfig())
    defaults = dict(
        dt_sim=0.01,
        decimation=2,
        episode_length_s=4.0,
        command_low=(-0.6, -0.4),
        command_high=(1.0, 0.4),
        tracking_sigma=0.25,
        termination_speed_max=3.0,
        obs_noise_scale=0.0,
        action_scale=2.0,
        dr=dr,
    )
    defaults.update(overrides)
    return TaskConfig(**defaults)


class TestTaskConfig:
    def test_dt_ctrl(self):
        task = pointmass_task()
        assert task.dt_ctrl == pytest.approx(0.02)
        assert task.episode_length == 200

    def test_rejects_fractional_episode(self):
        with pytest.raises(ValueError, match="whole number"):
            pointmass_task(episode_length_s=4.013)

    def test_rejects_bad_command_range(self):
        with pytest.raises(ValueError, match="command_low"):
            pointmass_task(command_low=(1.0, 0.0), command_high=(0.0, 0.0))

    def test_rejects_bad_dr_range(self):
        with pytest.raises(ValueError, match="lo"):
            pointmass_task(dr=DRConfig(reset_mass_delta_range=(1.0, -1.0)))


class TestMaterialize:
    def test_fresh_reset_semantics(self):
        pool = materialize(pointmass_task(), 4, "pointmass", seed=7)
        assert np.all(pool.state["position"] == 0.0)
        assert np.all(pool.state["velocity"] == 0.0)
        assert np.all(pool.episode_step == 0)
        # distinct sampled commands
        assert len({tuple(c) for c in pool.command}) == 4

    def test_deterministic_by_construction(self):
        a = materialize(pointmass_task(), 4, "pointmass", seed=7)
        b = materialize(pointmass_task(), 4, "pointmass", seed=7)
        assert np.array_equal(a.command, b.command)
        for key in a.state:
            assert np.array_equal(a.state[key], b.state[key])

    def test_paper_scale_pool(self):
        # 2048 envs x 1 step = the per-cycle accounting unit
        pool = materialize(pointmass_task(), 2048, "pointmass", seed=1)
        assert pool.n_envs * 1 == 2048

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="unknown backend"):
            materialize(pointmass_task(), 2, "warpdrive", seed=0)

    def test_nonpositive_n_envs(self):
        with pytest.raises(ValueError, match="n_envs"):
            materialize(pointmass_task(), 0, "pointmass", seed=0)


class TestReset:
    def test_sparse_reset_contract(self):
        pool = materialize(pointmass_task(), 4, "pointmass", seed=3)
        pool.step(np.full((4, 2), 0.5))
        before = {k: v.copy() for k, v in pool.state.items()}
        payload = ResetPayload(env_ids=[1, 3], fields={"mass_delta": [0.5, -0.2]})
        pool.reset([1, 3], payload)
        assert pool.state["mass"][1] == pytest.approx(1.5)
        assert pool.state["mass"][3] == pytest.approx(0.8)
        for i in (0, 2):
            for key in before:
                assert np.array_equal(pool.state[key][i], before[key][i])
        assert np.all(pool.episode_step[[1, 3]] == 0)
        assert np.all(pool.episode_step[[0, 2]] == 1)

    def test_unsupported_field_skipped_and_logged(self):
        pool = materialize(pointmass_task(), 2, "pointmass", seed=3)
        payload = ResetPayload(env_ids=[0], fields={"gravity": [9.9]})
        n_before = len(pool.skip_log)
        pool.reset([0], payload)
        assert len(pool.skip_log) == n_before + 1
        assert pool.skip_log[-1].field == "gravity"

    def test_capability_filter_set_identity(self):
        pool = materialize(pointmass_task(), 2, "pointmass", seed=3)
        payload = ResetPayload(
            env_ids=[0, 1],
            fields={
                "mass_delta": [0.1, 0.2],
                "gravity": [9.0, 9.1],
                "friction": [0.5, 0.6],
            },
        )
        n_before = len(pool.skip_log)
        pool.reset([0, 1], payload)
        requested = set(payload.fields)
        supported = pool.capabilities.supported_reset_fields
        assert len(pool.skip_log) - n_before == len(requested - supported)

    def test_payload_dim_mismatch(self):
        with pytest.raises(ValueError, match="leading dim"):
            ResetPayload(env_ids=[0, 1], fields={"mass_delta": [0.5]})

    def test_out_of_range_env_id(self):
        pool = materialize(pointmass_task(), 2, "pointmass", seed=3)
        with pytest.raises(ValueError, match="out of range"):
            pool.reset([5])

    def test_duplicate_env_ids(self):
        pool = materialize(pointmass_task(), 2, "pointmass", seed=3)
        with pytest.raises(ValueError, match="duplicate"):
            pool.reset([0, 0])


class TestStep:
    def test_zero_error_reward(self):
        # a = a_prev = 0 and v = c exactly: reward = dt * w_track * 1
        task = pointmass_task()
        pool = materialize(task, 2, "pointmass", seed=5)
        pool.state["velocity"][:] = pool.command
        batch = pool.step(np.zeros((2, 2)))
        # one drag-affected substep pulls v slightly off c; evaluate via the
        # pre-step trick instead: set v so that post-step v == c
        # Simpler: zero drag effect by checking against the actual post-step v.
        # Here assert the analytic bound instead:
        assert np.all(batch.reward <= task.dt_ctrl * 1.0 + 1e-12)

    def test_zero_error_reward_exact(self):
        # Freeze dynamics (massless drift): dt_sim=0 is invalid, so instead
        # verify the kernel arithmetic directly on a constructed state where
        # velocity equals command after stepping with matched action.
        task = pointmass_task()
        pool = materialize(task, 1, "pointmass", seed=5)
        # choose command c, set v = c / (1 - dt*drag adjustments) such that
        # post-step v == c when u = m * drag * c (drag-cancelling force)
        c = pool.command[0]
        m = pool.state["mass"][0]
        u = m * pool.backend.drag * c
        a = u / task.action_scale
        assert np.all(np.abs(a) <= 1.0)
        pool.state["velocity"][0] = c
        pool.prev_action[0] = a
        batch = pool.step(np.tile(a, (1, 1)))
        # v stays exactly at c (u/m - drag*v == 0), a == a_prev
        assert batch.reward[0] == pytest.approx(task.dt_ctrl * 1.0, abs=1e-12)

    def test_push_applied_at_interval(self):
        dr = DRConfig(push_enabled=True, push_interval_steps=5,
                      push_max_delta_v=(0.5, 0.5))
        pool = materialize(pointmass_task(dr=dr), 2, "pointmass", seed=9)
        kicked = []
        for step in range(1, 11):
            v_before = pool.state["velocity"].copy()
            batch = pool.step(np.zeros((2, 2)))
            if len(batch.info["push_plan"]):
                kicked.append(step)
                assert not np.array_equal(v_before, pool.state["velocity"])
        assert kicked == [5, 10]

    def test_paper_push_interval_default(self):
        assert DRConfig().push_interval_steps == 625

    def test_termination_and_autoreset_scalar_oracle(self):
        # Drive one env with max action; oracle integrates the same dynamics
        # scalar-style and predicts the exact crossing step.
        task = pointmass_task(termination_speed_max=1.0)
        pool = materialize(task, 1, "pointmass", seed=11)
        m = float(pool.state["mass"][0])

        v = np.zeros(2)
        oracle_cross = None
        for step in range(1, 200):
            u = np.array([1.0, 0.0]) * task.action_scale
            for _ in range(task.decimation):
                v = v + task.dt_sim * (u / m - pool.backend.drag * v)
            if np.linalg.norm(v) > task.termination_speed_max:
                oracle_cross = step
                break
        assert oracle_cross is not None

        actions = np.array([[1.0, 0.0]])
        for step in range(1, 200):
            batch = pool.step(actions)
            if batch.terminated[0]:
                assert step == oracle_cross
                # auto-reset happened within the same step
                assert np.all(pool.state["velocity"][0] == 0.0)
                assert pool.episode_step[0] == 0
                break
        else:
            pytest.fail("termination never triggered")

    def test_decimation_consistency(self):
        # One pool step with decimation k == k scalar-oracle substeps, 1e-12.
        task = pointmass_task(decimation=4)
        pool = materialize(task, 3, "pointmass", seed=13)
        actions = np.array([[0.3, -0.2], [0.9, 0.1], [-1.0, 1.0]])
        v = pool.state["velocity"].copy()
        p = pool.state["position"].copy()
        m = pool.state["mass"].copy()
        u = np.clip(actions, -1, 1) * task.action_scale
        for _ in range(task.decimation):
            for i in range(3):
                v[i] = v[i] + task.dt_sim * (u[i] / m[i] - pool.backend.drag * v[i])
                p[i] = p[i] + task.dt_sim * v[i]
        pool.step(actions)
        np.testing.assert_allclose(pool.state["velocity"], v, rtol=0, atol=1e-12)
        np.testing.assert_allclose(pool.state["position"], p, rtol=0, atol=1e-12)

    def test_action_clipping(self):
        task = pointmass_task()
        pool = materialize(task, 1, "pointmass", seed=1)
        pool.step(np.array([[10.0, -10.0]]))
        v_big = pool.state["velocity"].copy()
        pool2 = materialize(task, 1, "pointmass", seed=1)
        pool2.step(np.array([[1.0, -1.0]]))
        assert np.array_equal(v_big, pool2.state["velocity"])

    def test_shape_and_finiteness_errors(self):
        pool = materialize(pointmass_task(), 2, "pointmass", seed=1)
        with pytest.raises(ValueError, match="shape"):
            pool.step(np.zeros((3, 2)))
        with pytest.raises(ValueError, match="finite"):
            pool.step(np.array([[np.nan, 0.0], [0.0, 0.0]]))

    def test_truncation_yields_to_termination(self):
        task = pointmass_task(episode_length_s=0.04)  # 2 control steps
        pool = materialize(task, 1, "pointmass", seed=1)
        pool.step(np.zeros((1, 2)))
        # force a speed violation on the step that also hits the limit
        pool.state["velocity"][0] = (10.0, 0.0)
        term, trunc = pool.check_termination()
        pool.episode_step[0] = task.episode_length
        term, trunc = pool.check_termination()
        assert term[0] and not trunc[0]

    def test_truncation_flag(self):
        task = pointmass_task(episode_length_s=0.04)
        pool = materialize(task, 1, "pointmass", seed=1)
        b1 = pool.step(np.zeros((1, 2)))
        assert not b1.truncated[0]
        b2 = pool.step(np.zeros((1, 2)))
        assert b2.truncated[0] and not b2.terminated[0]


class TestSampleResetPayload:
    caps = BackendCapabilities(("mass_delta", "com_offset"), ())

    def test_degenerate_range(self):
        dr = DRConfig(reset_mass_delta_range=(0.0, 0.0))
        rngs = env_streams(0, 4)
        payload = sample_reset_payload(dr, self.caps, [0, 1, 2, 3], rngs)
        assert np.all(payload.fields["mass_delta"] == 0.0)

    def test_paper_mass_range_bounds(self):
        dr = DRConfig(reset_mass_delta_range=(-1.0, 3.0))
        rngs = env_streams(0, 64)
        payload = sample_reset_payload(dr, self.caps, list(range(64)), rngs)
        vals = payload.fields["mass_delta"]
        assert np.all(vals >= -1.0) and np.all(vals <= 3.0)

    def test_disabled_field_absent(self):
        dr = DRConfig(reset_mass_delta_range=(-1.0, 1.0),
                      reset_com_offset_range=None)
        rngs = env_streams(0, 2)
        payload = sample_reset_payload(dr, self.caps, [0, 1], rngs)
        assert "com_offset" not in payload.fields

    def test_deterministic(self):
        dr = DRConfig(reset_mass_delta_range=(-1.0, 3.0))
        a = sample_reset_payload(dr, self.caps, [0, 1], env_streams(5, 2))
        b = sample_reset_payload(dr, self.caps, [0, 1], env_streams(5, 2))
        assert np.array_equal(a.fields["mass_delta"], b.fields["mass_delta"])

    def test_empty_env_ids_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            sample_reset_payload(DRConfig(), self.caps, [], env_streams(0, 1))


class TestBuildIntervalPlan:
    def test_disabled_always_empty(self):
        rngs = env_streams(0, 4)
        dr = DRConfig(push_enabled=False)
        for step in (0, 1, 625):
            plan = build_interval_plan(dr, step, np.ones(4, bool), rngs)
            assert len(plan) == 0

    def test_fires_at_625(self):
        dr = DRConfig(push_enabled=True, push_interval_steps=625)
        rngs = env_streams(0, 4)
        plan = build_interval_plan(dr, 625, np.ones(4, bool), rngs)
        assert len(plan) == 4
        assert np.all(np.abs(plan.delta_v) <= 0.5)

    def test_modulo_gate(self):
        dr = DRConfig(push_enabled=True, push_interval_steps=625)
        rngs = env_streams(0, 4)
        plan = build_interval_plan(dr, 624, np.ones(4, bool), rngs)
        assert len(plan) == 0


class TestInvariants:
    def test_sparse_reset_isolation_snapshot_diff(self):
        # Trajectories of envs not reset are bitwise unchanged by a reset call.
        task = pointmass_task(
            obs_noise_scale=0.01,
            dr=DRConfig(reset_mass_delta_range=(-0.2, 0.5)),
        )
        actions = [
            np.random.default_rng(i).uniform(-1, 1, (4, 2)) for i in range(12)
        ]

        def run(inject_reset: bool):
            pool = materialize(task, 4, "pointmass", seed=21)
            traj = []
            for t, a in enumerate(actions):
                if inject_reset and t == 6:
                    payload = sample_reset_payload(
                        task.dr, pool.capabilities, [1], pool.env_rngs()
                    )
                    pool.reset([1], payload)
                batch = pool.step(a)
                traj.append(
                    (batch.obs.copy(), pool.state["velocity"].copy(),
                     pool.state["position"].copy())
                )
            return traj

        base = run(False)
        touched = run(True)
        untouched = [0, 2, 3]
        for (obs_a, v_a, p_a), (obs_b, v_b, p_b) in zip(base, touched):
            assert np.array_equal(obs_a[untouched], obs_b[untouched])
            assert np.array_equal(v_a[untouched], v_b[untouched])
            assert np.array_equal(p_a[untouched], p_b[untouched])

    def test_step_determinism(self):
        task = pointmass_task(
            obs_noise_scale=0.01,
            dr=DRConfig(push_enabled=True, push_interval_steps=3,
                        reset_mass_delta_range=(-0.1, 0.1)),
        )
        rng = np.random.default_rng(0)
        actions = [rng.uniform(-1, 1, (3, 2)) for _ in range(20)]

        def run():
            pool = materialize(task, 3, "pointmass", seed=2)
            out = []
            for a in actions:
                b = pool.step(a)
                out.append((b.obs, b.reward, b.terminated, b.truncated))
            return out

        for (o1, r1, t1, u1), (o2, r2, t2, u2) in zip(run(), run()):
            assert np.array_equal(o1, o2)
            assert np.array_equal(r1, r2)
            assert np.array_equal(t1, t2)
            assert np.array_equal(u1, u2)

    def test_reward_positivity_bound(self):
        task = pointmass_task()
        pool = materialize(task, 8, "pointmass", seed=4)
        rng = np.random.default_rng(1)
        bound = task.dt_ctrl * task.reward_weights["track"]
        for _ in range(30):
            batch = pool.step(rng.uniform(-1, 1, (8, 2)))
            assert np.all(batch.reward <= bound + 1e-12)
            assert np.all(batch.info["tracking_kernel"] > 0.0)
            assert np.all(batch.info["tracking_kernel"] <= 1.0)

    def test_pendulum_contract_generic(self):
        task = TaskConfig(
            command_low=(-1.0,), command_high=(1.0,),
            termination_speed_max=8.0, obs_noise_scale=0.0,
            dr=DRConfig(reset_mass_delta_range=(-0.1, 0.1)),
        )
        pool = materialize(task, 4, "pendulum", seed=1)
        batch = pool.step(np.zeros((4, 1)))
        assert batch.obs.shape == (4, 5)
        assert batch.critic_obs.shape == (4, 6)
        # pendulum does not support com_offset; provider never samples it
        payload = sample_reset_payload(
            DRConfig(reset_mass_delta_range=(0, 0.1),
                     reset_com_offset_range=(-0.1, 0.1)),
            pool.capabilities, [0], pool.env_rngs(),
        )
        assert "com_offset" not in payload.fields
