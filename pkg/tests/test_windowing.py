import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetex import errors, windowing
from facetex.ingest import FrameSequence
from facetex.tracking import RoiTrack
from facetex.windowing import VideoVolume, WindowingConfig


def _volume(height=16, width=16, depth=300, fps=30.0, fill=None):
    if fill is None:
        rng = np.random.default_rng(0)
        data = rng.integers(0, 256, size=(height, width, depth), dtype=np.uint8)
    else:
        data = np.full((height, width, depth), fill, dtype=np.uint8)
    return VideoVolume(data, fps, video_id="v0")


class TestExtractPatchVolume:
    def test_static_roi_constant_frames(self):
        frames = FrameSequence(np.full((10, 20, 30), 9, dtype=np.uint8), 30.0, "v")
        roi = RoiTrack(np.full(10, 2), np.full(10, 3), 8, 8)
        vol = windowing.extract_patch_volume(frames, roi)
        assert vol.data.shape == (8, 8, 10)
        assert (vol.data == 9).all()

    def test_shape_and_time_slices(self):
        k = np.arange(12, dtype=np.uint8)
        frames = FrameSequence(
            np.broadcast_to(k[:, None, None], (12, 10, 10)).copy(), 25.0, "v"
        )
        roi = RoiTrack(np.zeros(12), np.zeros(12), 6, 7)
        vol = windowing.extract_patch_volume(frames, roi)
        assert vol.data.shape == (6, 7, 12)
        for t in range(12):
            assert (vol.data[:, :, t] == t).all()

    def test_moving_roi(self):
        base = np.arange(100, dtype=np.uint8).reshape(10, 10)
        frames = FrameSequence(np.stack([base, base]), 30.0, "v")
        roi = RoiTrack([0, 1], [0, 2], 3, 3)
        vol = windowing.extract_patch_volume(frames, roi)
        assert (vol.data[:, :, 0] == base[0:3, 0:3]).all()
        assert (vol.data[:, :, 1] == base[1:4, 2:5]).all()

    def test_length_mismatch(self):
        frames = FrameSequence(np.zeros((4, 8, 8), dtype=np.uint8), 30.0, "v")
        roi = RoiTrack(np.zeros(3), np.zeros(3), 4, 4)
        with pytest.raises(errors.ValidationError):
            windowing.extract_patch_volume(frames, roi)


class TestPartition:
    def test_window_start_arithmetic(self):
        vol = _volume(depth=300, fps=30.0)
        windows = windowing.partition(vol, WindowingConfig(2.0, 1.0, True))
        assert len(windows) == 9
        assert [w.start_frame for w in windows] == [30 * i for i in range(9)]
        assert all(w.depth == 60 for w in windows)
        assert [w.window_index for w in windows] == list(range(9))

    def test_non_sliding_single_window(self):
        vol = _volume(depth=300)
        windows = windowing.partition(vol, WindowingConfig(2.0, 1.0, False))
        assert len(windows) == 1
        assert windows[0].depth == 300

    def test_short_video_fallback(self):
        vol = _volume(depth=45)
        windows = windowing.partition(vol, WindowingConfig(2.0, 1.0, True))
        assert len(windows) == 1
        assert windows[0].depth == 45

    def test_window_content_matches_slices(self):
        vol = _volume(depth=100, fps=10.0)
        windows = windowing.partition(vol, WindowingConfig(3.0, 1.5, True))
        # Kw = 30, hop = 15
        for i, w in enumerate(windows):
            assert np.array_equal(w.data, vol.data[:, :, i * 15 : i * 15 + 30])

    def test_subframe_window_errors(self):
        vol = _volume(depth=10, fps=10.0)
        with pytest.raises(errors.ParameterError):
            windowing.partition(vol, WindowingConfig(0.01, 1.0, True))

    @settings(max_examples=200, deadline=None)
    @given(
        depth=st.integers(1, 400),
        fps=st.sampled_from([10.0, 24.0, 25.0, 30.0, 60.0]),
        d=st.floats(0.2, 5.0),
        s=st.floats(0.1, 3.0),
    )
    def test_count_formula(self, depth, fps, d, s):
        try:
            window, hop = windowing.window_frame_counts(WindowingConfig(d, s, True), fps)
        except errors.ParameterError:
            return
        vol = _volume(height=6, width=6, depth=depth, fps=fps)
        got = len(windowing.partition(vol, WindowingConfig(d, s, True)))
        if depth < window:
            assert got == 1
        else:
            assert got == (depth - window) // hop + 1

    def test_stride_larger_than_window_warns(self):
        with pytest.warns(UserWarning):
            WindowingConfig(1.0, 2.0, True)


class TestSelectArea:
    def test_even_split(self):
        vol = _volume(height=100, width=16, depth=8)
        top = windowing.select_area(vol, "T")
        bottom = windowing.select_area(vol, "B")
        assert top.data.shape[0] == 50 and bottom.data.shape[0] == 50
        assert np.array_equal(np.vstack([top.data, bottom.data]), vol.data)

    def test_odd_split_middle_row_to_bottom(self):
        vol = _volume(height=101, width=16, depth=8)
        assert windowing.select_area(vol, "T").height == 50
        assert windowing.select_area(vol, "B").height == 51

    def test_full_identity(self):
        vol = _volume(height=20, width=10, depth=6)
        full = windowing.select_area(vol, "F")
        assert np.array_equal(full.data, vol.data)
        assert full.area == "F"

    def test_area_tag_recorded(self):
        vol = _volume(height=30, width=10, depth=6)
        assert windowing.select_area(vol, "T").area == "T"
        assert windowing.select_area(vol, "B").area == "B"

    def test_too_small(self):
        vol = _volume(height=8, width=10, depth=6)
        with pytest.raises(errors.TooSmallError):
            windowing.select_area(vol, "T")

    def test_partition_commutes_with_selection(self):
        vol = _volume(height=24, width=12, depth=90, fps=30.0)
        cfg = WindowingConfig(1.0, 0.5, True)
        first = [
            windowing.select_area(w, "B") for w in windowing.partition(vol, cfg)
        ]
        second = windowing.partition(windowing.select_area(vol, "B"), cfg)
        assert len(first) == len(second)
        for a, b in zip(first, second):
            assert np.array_equal(a.data, b.data)
            assert a.area == b.area == "B"
            assert a.start_frame == b.start_frame
            assert a.window_index == b.window_index
