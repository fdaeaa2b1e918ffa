"""Replay-based SAC/FlashSAC pipeline over a simulated device boundary.

Roles: a collector (env stepping, inference, replay insertion, and, on the
baseline path, snapshot-sample + pack one tick ahead), a transfer agent
(baseline), and a learner (batch acquisition per replay-path variant,
updates, weight publication).

Variants move the replay boundary:
  C        device-cache replay, lazy sync + gather on the learner path,
           strict collector/learner alternation (no overlap)
  B        same device-cache replay path, but the collector overlaps
  A        CPU-resident replay, learner-side sample + pack + synchronous
           pageable transfer each tick (no prefetch, single device slot)
  baseline CPU-resident replay, pinned pack slots, one-tick-ahead async
           transfer into the cold slot of a hot/cold device pair

Collector rounds and learner ticks are 1:1 after the replay warmup, so
each retained cycle accounts for exactly num_envs * env_steps_per_sync
environment steps.
"""

from __future__ import annotations

import threading
import time

import numpy as np

from ..algos import (
    NStepPacker,
    ReturnStdNormalizer,
    SacState,
    sac_update,
)
from ..envcore import materialize
from ..envcore.rng import stream
from ..replaypath import (
    DeviceArena,
    DeviceBatchSlot,
    DeviceReplayCache,
    HotColdPair,
    PackSlotPair,
    ReplayStorage,
    RowCodec,
    SlotState,
    TransferAgent,
    pack,
    submit_transfer,
)
from ..tensornet import (
    Arch,
    Normalizer,
    forward,
    init_params,
    sample_squashed,
    save_checkpoint,
)
from ..traceview import Tracer, now_ns
from .collect import EpisodeTracker
from .ppo_runner import finalize_trace
from .report import MetricsWriter, RunClock, RunConfig, RunReport
from .sync import ErrorBox, WeightSlot

SAC_FIELDS = [
    "iteration", "env_steps", "critic_loss", "actor_loss", "alpha_loss",
    "alpha", "staleness", "mean_episode_reward", "mean_tracking_kernel",
]

STALL_TIMEOUT_S = 10.0


class _Tickets:
    """Round/tick pairing with a bounded collector lead."""

    def __init__(self, lead: int):
        self.lead = lead
        self.rounds = 0
        self.ticks = 0
        self.cond = threading.Condition()

    def wait_collector_turn(self, stop) -> bool:
        with self.cond:
            while self.rounds - self.ticks >= self.lead:
                if stop.is_set():
                    return False
                self.cond.wait(timeout=0.05)
            return True

    def finish_round(self) -> None:
        with self.cond:
            self.rounds += 1
            self.cond.notify_all()

    def wait_learner_turn(self, tick: int, stop, timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        with self.cond:
            while self.rounds <= tick:
                if stop.is_set() or time.monotonic() > deadline:
                    return False
                self.cond.wait(timeout=0.05)
            return True

    def finish_tick(self) -> None:
        with self.cond:
            self.ticks += 1
            self.cond.notify_all()


class SacPipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sac = cfg.sac
        self.tracer = Tracer(enabled=cfg.trace_enabled)
        self.pool = materialize(cfg.task, cfg.num_envs, cfg.backend, cfg.seed)
        obs_dim = self.pool.obs_dim
        act_dim = self.pool.action_dim

        actor = init_params(Arch(obs_dim, cfg.hidden_dims, act_dim),
                            seed=cfg.seed, init_noise_std=cfg.init_noise_std)
        q1 = init_params(Arch(obs_dim + act_dim, cfg.hidden_dims, 1),
                         seed=cfg.seed + 1)
        q2 = init_params(Arch(obs_dim + act_dim, cfg.hidden_dims, 1),
                         seed=cfg.seed + 2)
        self.state = SacState.create(actor, q1, q2, self.sac)

        self.codec = RowCodec(obs_dim, act_dim)
        self.storage = ReplayStorage(
            capacity=self.sac.replay_buffer_n * cfg.num_envs,
            row_width=self.codec.width,
            tracer=self.tracer,
        )
        self.slot = WeightSlot(self.tracer)
        self.slot.publish(actor)
        self.normalizer = (
            Normalizer(obs_dim) if self.sac.obs_normalization else None
        )
        use_packing = cfg.algo == "flashsac" or self.sac.n_step > 1
        self.nstep = (
            NStepPacker(self.sac.n_step, self.sac.gamma, cfg.num_envs)
            if use_packing else None
        )
        self.reward_norm = (
            ReturnStdNormalizer(self.sac.gamma, self.sac.normalized_g_max,
                                cfg.num_envs)
            if self.sac.normalize_reward else None
        )

        self.rng_policy = stream(cfg.seed, "policy")
        self.rng_replay = stream(cfg.seed, "replay")
        self.rng_learner = stream(cfg.seed, "learner")

        self.arena = DeviceArena(cfg.cost_model)
        batch_bytes = self.sac.batch_size * self.codec.width * 4
        self.variant = cfg.variant
        self.cache = None
        self.pack_pair = None
        self.hotcold = None
        self.device_slot = None
        self.agent = None
        if self.variant in ("C", "B"):
            self.cache = DeviceReplayCache(self.storage, self.arena)
            self.arena.alloc("batch_slot", batch_bytes)
        elif self.variant == "A":
            self.pack_pair = PackSlotPair(self.sac.batch_size,
                                          self.codec.width,
                                          memory_class="pageable")
            self.device_slot = DeviceBatchSlot("hot", self.sac.batch_size,
                                               self.codec.width)
            self.arena.alloc("batch_slot", batch_bytes)
        else:  # baseline
            self.pack_pair = PackSlotPair(self.sac.batch_size,
                                          self.codec.width,
                                          memory_class="pinned")
            self.hotcold = HotColdPair(self.sac.batch_size, self.codec.width)
            self.arena.alloc("batch_slot_hot", batch_bytes)
            self.arena.alloc("batch_slot_cold", batch_bytes)
            self.agent = TransferAgent(self.arena, self.tracer)

        self.tracker = EpisodeTracker(cfg.num_envs)
        self.tickets = _Tickets(lead=1 if self.variant == "C" else 2)
        self.stop = threading.Event()
        self.box = ErrorBox()
        self.obs, _ = self.pool.observe()
        self.inserted_rows = 0
        self.consumed_samples = 0
        self.collector_env_steps = 0
        self.last_fetched_version = 1
        self.warmup_rounds_done = 0

    # -- collector role -----------------------------------------------------

    def collector_round(self, warmup: bool) -> bool:
        cfg, sac = self.cfg, self.sac
        if not warmup:
            stall_start = now_ns()
            if not self.tickets.wait_collector_turn(self.stop):
                return False
            stall_end = now_ns()
            if stall_end - stall_start > 1000:
                self.tracer.record("collector", "collector/stall",
                                   stall_start, stall_end)
        version, actor = self.slot.fetch()
        self.last_fetched_version = version

        for _ in range(cfg.env_steps_per_sync):
            with self.tracer.span("collector", "collector/actor_inference"):
                obs_n = self._normalize_update(self.obs)
                mean, _ = forward(actor, obs_n)
                eps = self.rng_policy.standard_normal(mean.shape)
                actions, _, _ = sample_squashed(mean, actor.log_std, eps)
            with self.tracer.span("collector", "collector/env_step"):
                batch = self.pool.step(actions.astype(np.float64))

            next_obs = batch.obs.copy()
            done_ids = batch.info.get("final_env_ids")
            if done_ids is not None:
                next_obs[done_ids] = batch.info["final_obs"]
            next_n = self._normalize_apply(next_obs)

            if self.nstep is not None or self.reward_norm is not None:
                rewards = batch.reward
                done = batch.terminated | batch.truncated
                if self.reward_norm is not None:
                    rewards = self.reward_norm.normalize(rewards, done)
                if self.nstep is not None:
                    emitted = self.nstep.push(
                        obs_n, actions.astype(np.float32), rewards, next_n,
                        batch.terminated, batch.truncated,
                    )
                    if emitted:
                        rows = self.codec.encode(
                            np.stack([r[0] for r in emitted]),
                            np.stack([r[1] for r in emitted]),
                            np.array([r[2] for r in emitted]),
                            np.stack([r[3] for r in emitted]),
                            np.array([r[4] for r in emitted]),
                            np.array([r[5] for r in emitted]),
                        )
                        self.storage.insert(rows)
                        self.inserted_rows += len(rows)
                else:
                    rows = self.codec.encode(
                        obs_n, actions.astype(np.float32), rewards, next_n,
                        batch.terminated, np.ones(cfg.num_envs),
                    )
                    self.storage.insert(rows)
                    self.inserted_rows += len(rows)
            else:
                rows = self.codec.encode(
                    obs_n, actions.astype(np.float32), batch.reward, next_n,
                    batch.terminated, np.ones(cfg.num_envs),
                )
                self.storage.insert(rows)
                self.inserted_rows += len(rows)

            self.tracker.step(batch)
            self.obs = batch.obs
            self.collector_env_steps += cfg.num_envs

        if not warmup and self.variant == "baseline":
            rows = self.storage.snapshot_sample(sac.batch_size,
                                                self.rng_replay)
            stall_start = now_ns()
            free = self.pack_pair.acquire_free(timeout=STALL_TIMEOUT_S,
                                               stop=self.stop)
            if free is None:
                if self.stop.is_set():
                    return False
                raise self._stall_error("collector waiting for a FREE pack slot")
            stall_end = now_ns()
            if stall_end - stall_start > 1000:
                self.tracer.record("collector", "collector/stall",
                                   stall_start, stall_end)
            # pack one tick ahead of the learner's consumption
            pack(free, rows, self.pack_pair, self.tracer, track="collector")
            submit_transfer(free, self.hotcold, self.arena, mode="async",
                            tracer=self.tracer)
        if not warmup:
            self.tickets.finish_round()
        else:
            self.warmup_rounds_done += 1
        return True

    def _normalize_update(self, obs: np.ndarray) -> np.ndarray:
        if self.normalizer is None:
            return obs
        self.normalizer.update(obs)
        return self.normalizer.apply(obs)

    def _normalize_apply(self, obs: np.ndarray) -> np.ndarray:
        if self.normalizer is None:
            return obs
        return self.normalizer.apply(obs)

    # -- learner role ---------------------------------------------------------

    def learner_tick(self, tick: int) -> dict:
        gap_start = now_ns()
        if not self.tickets.wait_learner_turn(tick, self.stop,
                                              STALL_TIMEOUT_S):
            self.box.raise_if_set()
            raise self._stall_error(f"learner waiting for round {tick}")
        gap_end = now_ns()
        if gap_end - gap_start > 1000:
            self.tracer.record("learner", "learner/gap", gap_start, gap_end)

        batch = self._acquire_batch()
        stats_rows = []
        pad_s = self.cfg.learner_pad_ms / 1e3
        for _ in range(self.sac.updates_per_step):
            args = {}
            if pad_s > 0:
                args["synthetic_pad_us"] = self.cfg.learner_pad_ms * 1e3
            with self.tracer.span("learner", "learner/update", **args):
                if pad_s > 0:
                    time.sleep(pad_s)
                stats = sac_update(batch, self.state, self.sac,
                                   self.rng_learner)
            self.consumed_samples += self.sac.batch_size
            stats_rows.append(stats)
        self.slot.publish(self.state.params.actor)
        self.tickets.finish_tick()

        merged = {}
        for stats in stats_rows:
            for key, value in stats.extra.items():
                merged[key] = value
        merged["staleness"] = self.slot.version - self.last_fetched_version
        return merged

    def _acquire_batch(self) -> dict:
        if self.variant in ("C", "B"):
            indices = self.storage.sample_indices(self.sac.batch_size,
                                                  self.rng_learner)
            rows = self.cache.lazy_sync_and_gather(
                self.storage, indices, self.arena, self.tracer, "learner"
            )
            return self.codec.decode(rows)

        if self.variant == "A":
            with self.tracer.span("learner", "learner/replay_sample",
                                  rows=self.sac.batch_size):
                rows = self.storage.snapshot_sample(self.sac.batch_size,
                                                    self.rng_replay)
            free = self.pack_pair.acquire_free(timeout=STALL_TIMEOUT_S,
                                               stop=self.stop)
            if free is None:
                raise self._stall_error("variant A pack slot unavailable")
            pack(free, rows, self.pack_pair, self.tracer, track="learner")
            # synchronous pageable transfer, blocking the learner
            free.transition(SlotState.TRANSFERRING)
            nbytes = free.nbytes
            with self.tracer.span("learner", "transfer/h2d", bytes=nbytes,
                                  mode="sync") as args:
                args["modeled_us"] = self.arena.charge(nbytes, sync=True)
                self.device_slot.buffer[:] = free.buffer
                self.device_slot.valid = True
            free.transition(SlotState.FREE)
            return self.codec.decode(self.device_slot.buffer)

        # baseline: hot/cold swap with one-tick-ahead prefetch
        wait_start = now_ns()
        waited = False
        while not self.hotcold.wait_cold_valid(timeout=0.05):
            waited = True
            if self.stop.is_set():
                self.box.raise_if_set()
                raise self._stall_error("baseline cold slot never valid")
            if (now_ns() - wait_start) / 1e9 > STALL_TIMEOUT_S:
                raise self._stall_error("baseline cold slot never valid")
        wait_end = now_ns()
        if waited:
            self.tracer.record("learner", "learner/h2d_wait", wait_start,
                               wait_end)
        staged = self.hotcold.cold.staged_ready_ns
        if staged:
            self.tracer.record("signal", "signal/ready", staged, wait_end,
                               {"note": "pack-ready to batch boundary"})
        self.hotcold.swap_hot_cold()
        with self.tracer.span("learner", "learner/replay_sample",
                              rows=self.sac.batch_size):
            batch = self.codec.decode(self.hotcold.hot.buffer)
        return batch

    def _stall_error(self, what: str) -> RuntimeError:
        dump = {
            "rounds": self.tickets.rounds,
            "ticks": self.tickets.ticks,
            "replay_size": self.storage.size,
        }
        if self.pack_pair is not None:
            dump["pack_slots"] = [s.state.value for s in self.pack_pair.slots]
        if self.hotcold is not None:
            dump["cold_valid"] = self.hotcold.cold.valid
        return RuntimeError(f"pipeline stall: {what}; state {dump}")


def run_sac(cfg: RunConfig) -> RunReport:
    assert cfg.algo in ("sac", "flashsac")
    clock = RunClock()
    pipe = SacPipeline(cfg)
    sac = cfg.sac
    out_dir = cfg.out_dir
    metrics = MetricsWriter(
        out_dir / "metrics.csv" if out_dir else None, SAC_FIELDS
    )
    report = RunReport(
        env_steps_per_cycle=cfg.num_envs * cfg.env_steps_per_sync
    )

    def tick_and_log(tick: int) -> None:
        merged = pipe.learner_tick(tick)
        row = {
            "iteration": tick,
            "env_steps": pipe.collector_env_steps,
            "critic_loss": merged.get("critic_loss", ""),
            "actor_loss": merged.get("actor_loss", ""),
            "alpha_loss": merged.get("alpha_loss", ""),
            "alpha": merged.get("alpha", ""),
            "staleness": merged.get("staleness", 0),
            "mean_episode_reward": pipe.tracker.mean_episode_reward(),
            "mean_tracking_kernel": pipe.tracker.take_kernel_mean(),
        }
        metrics.write(row)
        report.reward_curve.append((tick, row["mean_episode_reward"]))
        report.kernel_curve.append((tick, row["mean_tracking_kernel"]))
        if out_dir is not None and (tick + 1) % cfg.save_interval == 0:
            save_checkpoint(out_dir / f"checkpoint_{tick + 1:06d}.npz",
                            pipe.state.params.actor, pipe.normalizer)

    if cfg.deterministic:
        for _ in range(sac.learning_starts):
            pipe.collector_round(warmup=True)
        for tick in range(cfg.max_iterations):
            pipe.collector_round(warmup=False)
            if pipe.agent is not None:
                pipe.agent.drain_one(timeout=1.0)
            tick_and_log(tick)
    else:
        if pipe.agent is not None:
            pipe.agent.start()

        def collector_loop() -> None:
            try:
                for _ in range(sac.learning_starts):
                    if not pipe.collector_round(warmup=True):
                        return
                while not pipe.stop.is_set():
                    if not pipe.collector_round(warmup=False):
                        return
            except BaseException as exc:
                pipe.box.set("collector", exc)
                pipe.stop.set()

        thread = threading.Thread(target=collector_loop, name="sac-collector",
                                  daemon=True)
        thread.start()
        try:
            for tick in range(cfg.max_iterations):
                tick_and_log(tick)
        finally:
            pipe.stop.set()
            thread.join(timeout=10.0)
            if pipe.agent is not None:
                pipe.agent.stop()
        pipe.box.raise_if_set()

    metrics.close()
    if out_dir is not None:
        report.metrics_path = str(out_dir / "metrics.csv")
        save_checkpoint(out_dir / "checkpoint_final.npz",
                        pipe.state.params.actor, pipe.normalizer)

    report.total_env_steps = pipe.collector_env_steps
    report.wall_time_s = clock.elapsed()
    report.env_steps_per_s = report.total_env_steps / max(report.wall_time_s,
                                                          1e-9)
    report.staleness_stats = {"last_fetch_lag":
                              pipe.slot.version - pipe.last_fetched_version}
    report.extra.update(
        inserted_rows=pipe.inserted_rows,
        consumed_samples=pipe.consumed_samples,
        paired_rounds=pipe.tickets.rounds,
        ticks=pipe.tickets.ticks,
        arena_footprint=pipe.arena.footprint(),
        variant=pipe.variant,
    )
    lines = [report.render()]
    finalize_trace(pipe.tracer, out_dir, report, lines)
    return report
