"""Trajectory ingestion, windowing, labeling, and synthesis contracts."""

from collections import Counter

import numpy as np
import pytest

from safecast.data import (
    AgentType,
    SyntheticSpec,
    WindowParams,
    extract_maneuver_labels,
    load_trajectories,
    split_windows,
    synthesize_scenes,
    synthesize_tracks,
    window_scenes,
    write_tracks_csv,
)
from safecast.errors import ArgumentError, EmptyInputError, FormatError

HEADER = "frame,agent_id,x,y,vx,vy,ax,ay,type,lane_id\n"


def _write(tmp_path, text, name="traj.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestNgsimLoader:
    def test_two_row_file_gives_one_track(self, tmp_path):
        path = _write(
            tmp_path,
            HEADER
            + "0,1,0.0,0.0,10.0,0.0,0.0,0.0,vehicle,1\n"
            + "1,1,1.0,0.0,10.0,0.0,0.0,0.0,vehicle,1\n",
        )
        result = load_trajectories(path, "ngsim_csv")
        assert len(result.tracks) == 1
        assert len(result.tracks[0]) == 2
        assert result.skipped_rows == 0

    def test_non_numeric_row_skipped_and_counted(self, tmp_path):
        path = _write(
            tmp_path,
            HEADER
            + "0,1,oops,0.0,10.0,0.0,0.0,0.0,vehicle,1\n"
            + "1,1,1.0,0.0,10.0,0.0,0.0,0.0,vehicle,1\n",
        )
        result = load_trajectories(path, "ngsim_csv")
        assert result.skipped_rows == 1
        assert len(result.tracks[0]) == 1

    def test_three_interleaved_agents_sorted(self, tmp_path):
        lines = [HEADER]
        for frame in (2, 0, 1):
            for agent in (3, 1, 2):
                lines.append(f"{frame},{agent},{frame + agent}.0,0,1,0,0,0,vehicle,1\n")
        result = load_trajectories(_write(tmp_path, "".join(lines)), "ngsim_csv")
        assert [t.agent_id for t in result.tracks] == [1, 2, 3]
        for track in result.tracks:
            assert np.all(np.diff(track.frames) > 0)

    def test_missing_column_named(self, tmp_path):
        path = _write(tmp_path, "frame,agent_id,x,y,vx,vy,ax,ay,type\n0,1,0,0,0,0,0,0,vehicle\n")
        with pytest.raises(FormatError) as err:
            load_trajectories(path, "ngsim_csv")
        assert "lane_id" in str(err.value)

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(EmptyInputError):
            load_trajectories(_write(tmp_path, HEADER), "ngsim_csv")
        with pytest.raises(EmptyInputError):
            load_trajectories(_write(tmp_path, "", name="e.csv"), "ngsim_csv")

    def test_velocity_inconsistency_warns(self, tmp_path):
        rows = [HEADER]
        for f in range(5):
            # claimed velocity 30 m/s but positions advance 1 m/frame at 10 Hz
            rows.append(f"{f},1,{float(f)},0.0,30.0,0.0,0.0,0.0,vehicle,1\n")
        result = load_trajectories(_write(tmp_path, "".join(rows)), "ngsim_csv")
        assert result.warnings

    def test_unknown_format_rejected(self, tmp_path):
        path = _write(tmp_path, HEADER + "0,1,0,0,0,0,0,0,vehicle,1\n")
        with pytest.raises(ArgumentError):
            load_trajectories(path, "csv")


class TestApolloLoader:
    def test_central_difference_velocities(self, tmp_path):
        lines = [f"{f} 7 1 {2.0 * f} 0.0\n" for f in range(5)]
        path = _write(tmp_path, "".join(lines), name="a.txt")
        result = load_trajectories(path, "apollo_txt", frame_rate=10.0)
        track = result.tracks[0]
        assert track.agent_type == AgentType.VEHICLE
        np.testing.assert_allclose(track.velocity[1:-1, 0], 20.0)

    def test_type_codes_mapped(self, tmp_path):
        text = "0 1 3 0 0\n1 1 3 1 0\n0 2 4 0 5\n1 2 4 1 5\n"
        result = load_trajectories(_write(tmp_path, text, name="a.txt"), "apollo_txt")
        types = {t.agent_id: t.agent_type for t in result.tracks}
        assert types == {1: AgentType.PEDESTRIAN, 2: AgentType.BICYCLE}


def _straight_tracks(n_agents=1, n_frames=100, spacing=10.0, speed=10.0):
    from safecast.data import Track

    tracks = []
    for i in range(n_agents):
        frames = np.arange(n_frames, dtype=np.int64)
        x = i * spacing + speed * frames * 0.1
        tracks.append(
            Track(
                agent_id=i,
                agent_type=AgentType.VEHICLE,
                frames=frames,
                position=np.column_stack([x, np.zeros(n_frames)]),
                velocity=np.tile([speed, 0.0], (n_frames, 1)),
                acceleration=np.zeros((n_frames, 2)),
                lane=np.ones(n_frames, dtype=np.int64),
            )
        )
    return tracks


class TestWindowing:
    def test_paper_temporal_configuration(self):
        params = WindowParams(t_h=3.0, t_f=5.0, downsample=2, frame_rate=10.0)
        assert params.history_steps == 15
        assert params.future_steps == 25
        windows = window_scenes(_straight_tracks(n_frames=100), params)
        assert windows
        w = windows[0]
        assert w.history.shape[1] == 15
        assert w.future.shape[0] == 25

    def test_single_agent_has_padded_neighbors(self):
        params = WindowParams(t_h=1.0, t_f=1.0, downsample=1, n_max=4)
        w = window_scenes(_straight_tracks(), params)[0]
        assert w.agent_ids[0] == 0
        assert np.all(w.agent_ids[1:] == -1)
        assert w.history_mask[0].all()
        assert not w.history_mask[1:].any()
        assert np.all(w.history[1:] == 0.0)

    def test_close_agents_appear_in_each_others_windows(self):
        params = WindowParams(t_h=1.0, t_f=1.0, downsample=1, d_close=25.0)
        windows = window_scenes(_straight_tracks(n_agents=2, spacing=10.0), params)
        by_ego = {w.ego_id: w for w in windows if w.anchor_frame == windows[0].anchor_frame}
        assert set(by_ego) == {0, 1}
        assert 1 in by_ego[0].agent_ids
        assert 0 in by_ego[1].agent_ids

    def test_far_agents_excluded(self):
        params = WindowParams(t_h=1.0, t_f=1.0, downsample=1, d_close=25.0)
        w = window_scenes(_straight_tracks(n_agents=2, spacing=30.0), params)[0]
        assert np.all(w.agent_ids[1:] == -1)

    def test_neighbor_order_distance_then_id(self):
        tracks = _straight_tracks(n_agents=4, spacing=0.0)
        # offsets: agent1 at +8, agent2 at -8, agent3 at +5
        tracks[1].position[:, 0] += 8.0
        tracks[2].position[:, 0] -= 8.0
        tracks[3].position[:, 0] += 5.0
        params = WindowParams(t_h=1.0, t_f=1.0, downsample=1)
        w = [x for x in window_scenes(tracks, params) if x.ego_id == 0][0]
        assert w.agent_ids[:4].tolist() == [0, 3, 1, 2]

    def test_history_reproduces_source_positions(self):
        tracks = _straight_tracks(n_agents=2, spacing=12.0)
        params = WindowParams(t_h=1.5, t_f=1.0, downsample=2)
        w = window_scenes(tracks, params)[0]
        ego = tracks[w.ego_id]
        lookup = ego.frame_lookup()
        frames = w.anchor_frame - 2 * np.arange(params.history_steps - 1, -1, -1)
        src = np.array([ego.position[lookup[int(f)]] for f in frames])
        np.testing.assert_array_equal(w.anchor.to_local(src), w.history[0, :, :2])
        # and the inverse transform recovers the source within float error
        np.testing.assert_allclose(w.anchor.to_world(w.history[0, :, :2]), src, atol=1e-9)

    def test_label_translation_invariance(self):
        spec = SyntheticSpec(n_scenes=6, lateral_mix={"L": 0.5, "S": 0.5}, seed=4)
        rng = np.random.default_rng(spec.seed)
        params = spec.window_params()
        for i in range(spec.n_scenes):
            tracks = synthesize_tracks(spec, rng)
            w1 = window_scenes(tracks, params, ego_ids={0})[0]
            for t in tracks:
                t.position += np.array([1234.5, -678.9])
            w2 = window_scenes(tracks, params, ego_ids={0})[0]
            assert extract_maneuver_labels(w1) == extract_maneuver_labels(w2)

    def test_split_disjoint_and_seeded(self):
        windows = synthesize_scenes(SyntheticSpec(n_scenes=20, seed=0, t_h=1.6, t_f=1.0))
        split = split_windows(windows, (0.5, 0.25, 0.25), seed=7)
        keys = [w.key for part in (split.train, split.val, split.test) for w in part]
        assert len(keys) == len(set(keys)) == len(windows)
        split2 = split_windows(windows, (0.5, 0.25, 0.25), seed=7)
        assert [w.key for w in split2.train] == [w.key for w in split.train]


class TestLabels:
    def test_straight_constant_speed(self):
        w = synthesize_scenes(SyntheticSpec(n_scenes=1, seed=0))[0]
        assert extract_maneuver_labels(w) == ("S", "C")

    def test_lateral_threshold_rule(self):
        w = synthesize_scenes(SyntheticSpec(n_scenes=1, seed=0))[0]
        w.future[:, 1] = np.linspace(0.0, 3.5, w.t_f)
        assert extract_maneuver_labels(w)[0] == "L"
        w.future[:, 1] *= -1.0
        assert extract_maneuver_labels(w)[0] == "R"
        w.future[:, 1] = 1.0
        assert extract_maneuver_labels(w)[0] == "S"

    def test_slowdown_rule(self):
        w = synthesize_scenes(SyntheticSpec(n_scenes=1, seed=0))[0]
        w.future_velocity[:] = w.history[0, :, 2:4].mean(axis=0) * 0.9
        assert extract_maneuver_labels(w)[1] == "D"


class TestSynthetic:
    def test_zero_noise_straight_future_exactly_linear(self):
        spec = SyntheticSpec(n_scenes=1, n_agents=1, seed=5)
        rng = np.random.default_rng(spec.seed)
        tracks = synthesize_tracks(spec, rng)
        track = tracks[0]
        dt = 1.0 / spec.frame_rate
        expected = track.position[0, 0] + track.velocity[0, 0] * (np.arange(len(track)) * dt)
        np.testing.assert_array_equal(track.position[:, 0], expected)
        assert np.all(track.position[:, 1] == track.position[0, 1])

    def test_lane_change_exceeds_lane_width_threshold(self):
        spec = SyntheticSpec(n_scenes=8, lateral_mix={"L": 1.0}, seed=2)
        for w in synthesize_scenes(spec):
            assert w.future[-1, 1] > 1.75

    def test_same_seed_byte_identical(self):
        spec = SyntheticSpec(n_scenes=5, noise=0.1, seed=11)
        a = synthesize_scenes(spec)
        b = synthesize_scenes(spec)
        for wa, wb in zip(a, b):
            np.testing.assert_array_equal(wa.history, wb.history)
            np.testing.assert_array_equal(wa.future, wb.future)

    def test_kinematic_consistency_within_tolerance(self):
        spec = SyntheticSpec(
            n_scenes=6,
            lateral_mix={"L": 0.4, "S": 0.6},
            longitudinal_mix={"A": 0.3, "D": 0.3, "C": 0.4},
            noise=0.05,
            seed=8,
        )
        rng = np.random.default_rng(spec.seed)
        dt = 1.0 / spec.frame_rate
        for _ in range(spec.n_scenes):
            for track in synthesize_tracks(spec, rng):
                derived = (track.position[2:] - track.position[:-2]) / (2 * dt)
                err = np.abs(derived - track.velocity[1:-1]).max()
                assert err < 0.5, f"velocity consistency violated: {err:.3f} m/s"

    def test_csv_round_trip(self, tmp_path):
        spec = SyntheticSpec(n_scenes=1, n_agents=3, seed=3, noise=0.02)
        rng = np.random.default_rng(spec.seed)
        tracks = synthesize_tracks(spec, rng)
        path = tmp_path / "scene.csv"
        write_tracks_csv(tracks, path)
        loaded = load_trajectories(path, "ngsim_csv")
        assert len(loaded.tracks) == 3
        for orig, back in zip(tracks, loaded.tracks):
            np.testing.assert_array_equal(back.position, orig.position)
            np.testing.assert_array_equal(back.velocity, orig.velocity)

    def test_maneuver_mix_histogram(self):
        spec = SyntheticSpec(n_scenes=200, lateral_mix={"L": 0.5, "S": 0.5}, seed=17)
        labels = Counter(extract_maneuver_labels(w)[0] for w in synthesize_scenes(spec))
        assert abs(labels["L"] / 200 - 0.5) <= 0.10
        assert abs(labels["S"] / 200 - 0.5) <= 0.10

    def test_braking_leader_scenes_slow_down(self):
        spec = SyntheticSpec(n_scenes=12, scenario="braking_leader", seed=6, t_f=3.0)
        windows = synthesize_scenes(spec)
        assert len(windows) == 12
        slowing = sum(1 for w in windows if extract_maneuver_labels(w)[1] == "D")
        assert slowing >= 8
