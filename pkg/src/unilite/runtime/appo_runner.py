"""Asynchronous PPO: the collector streams fixed-horizon segments into a
bounded ring while the learner drains, V-trace-corrects, and updates.

Weights are published after every learner update and fetched by the
collector between segments, so consumed-segment staleness is bounded by
ring capacity + 1. The deterministic mode advances the two roles in strict
alternation on one thread for reproducible curves.
"""

from __future__ import annotations

import threading

import numpy as np

from ..algos import AcOpt, adaptive_lr_step, appo_update
from ..envcore import materialize
from ..envcore.rng import stream
from ..tensornet import save_checkpoint
from ..traceview import Tracer
from .collect import SegmentCollector
from .ppo_runner import PPO_FIELDS, build_ac_params, finalize_trace
from .report import MetricsWriter, RunClock, RunConfig, RunReport
from .sync import ErrorBox, RolloutRing, WeightSlot


def run_appo(cfg: RunConfig) -> RunReport:
    assert cfg.algo == "appo"
    clock = RunClock()
    tracer = Tracer(enabled=cfg.trace_enabled)
    pool = materialize(cfg.task, cfg.num_envs, cfg.backend, cfg.seed)
    params = build_ac_params(cfg, pool)
    opt = AcOpt.for_params(params, cfg.appo.lr)
    slot = WeightSlot(tracer)
    slot.publish(params)

    collector = SegmentCollector(pool, tracer, cfg.seed)
    ring = RolloutRing(cfg.appo.replay_queue_size)
    rng_update = stream(cfg.seed, "update")
    out_dir = cfg.out_dir
    metrics = MetricsWriter(
        out_dir / "metrics.csv" if out_dir else None, PPO_FIELDS
    )
    report = RunReport(
        env_steps_per_cycle=cfg.num_envs * cfg.steps_per_env
    )
    staleness_seen: list[int] = []
    next_seq = {"value": 0}

    def collect_one():
        version, weights = slot.fetch()
        return collector.collect(weights, cfg.steps_per_env, version)

    def learn_one(segment, it: int) -> None:
        # sequence-number audit: no segment lost or duplicated
        if segment.seq != next_seq["value"]:
            raise RuntimeError(
                f"segment sequence broken: expected {next_seq['value']}, "
                f"got {segment.seq}"
            )
        next_seq["value"] += 1
        with tracer.span("learner", "learner/update"):
            stats = appo_update(segment, params, opt, cfg.appo, rng_update,
                                learner_version=slot.version)
        opt.set_lr(adaptive_lr_step(opt.lr, stats.kl, cfg.appo, it))
        slot.publish(params)
        staleness_seen.append(stats.staleness)
        row = {
            "iteration": it,
            "env_steps": collector.total_env_steps,
            "mean_episode_reward": collector.tracker.mean_episode_reward(),
            "mean_tracking_kernel": collector.tracker.take_kernel_mean(),
            **stats.as_row(),
        }
        metrics.write(row)
        report.reward_curve.append((it, row["mean_episode_reward"]))
        report.kernel_curve.append((it, row["mean_tracking_kernel"]))
        if out_dir is not None and (it + 1) % cfg.save_interval == 0:
            save_checkpoint(out_dir / f"checkpoint_{it + 1:06d}.npz",
                            params.actor)

    if cfg.deterministic:
        for it in range(cfg.max_iterations):
            learn_one(collect_one(), it)
    else:
        stop = threading.Event()
        box = ErrorBox()

        def collector_loop() -> None:
            try:
                while not stop.is_set():
                    segment = collect_one()
                    if not ring.put(segment, stop, tracer):
                        return
            except BaseException as exc:  # surfaced by the learner
                box.set("collector", exc)
                stop.set()

        thread = threading.Thread(target=collector_loop, name="appo-collector",
                                  daemon=True)
        thread.start()
        try:
            for it in range(cfg.max_iterations):
                segment = ring.get(stop, tracer)
                if segment is None:
                    break
                learn_one(segment, it)
        finally:
            stop.set()
            thread.join(timeout=10.0)
        box.raise_if_set()

    metrics.close()
    if out_dir is not None:
        report.metrics_path = str(out_dir / "metrics.csv")
        save_checkpoint(out_dir / "checkpoint_final.npz", params.actor)

    if staleness_seen:
        arr = np.asarray(staleness_seen)
        report.staleness_stats = {
            "max": int(arr.max()),
            "mean": float(arr.mean()),
            "bound": cfg.appo.replay_queue_size + 1,
        }
    report.total_env_steps = collector.total_env_steps
    report.wall_time_s = clock.elapsed()
    report.env_steps_per_s = report.total_env_steps / max(report.wall_time_s,
                                                          1e-9)
    lines = [report.render()]
    finalize_trace(tracer, out_dir, report, lines)
    return report
