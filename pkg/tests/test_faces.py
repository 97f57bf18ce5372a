import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfdetect.faces import (
    MarkerFaceDetector,
    MeanColorEmbedder,
    cluster_faces,
    detect_faces,
    expand_and_square_box,
    filter_clusters,
    sample_frame_indices,
    sample_shot_frames,
    similarity_components,
)
from dfdetect.types import (
    BoundingBox,
    FaceCluster,
    FaceObservation,
    FrameSample,
    Shot,
)


class TestExpandAndSquareBox:
    def test_worked_example_square(self):
        out = expand_and_square_box(BoundingBox(100, 100, 200, 200), 1.3, 1000, 1000)
        assert out == BoundingBox(85, 85, 215, 215)

    def test_worked_example_landscape(self):
        out = expand_and_square_box(BoundingBox(200, 300, 260, 340), 1.3, 640, 480)
        assert out == BoundingBox(191, 281, 269, 359)

    def test_worked_example_clamped(self):
        out = expand_and_square_box(BoundingBox(0, 0, 100, 100), 1.3, 1000, 1000)
        assert out == BoundingBox(0, 0, 115, 115)

    def test_margin_one_identity_on_squares(self):
        box = BoundingBox(37, 81, 97, 141)
        assert expand_and_square_box(box, 1.0, 640, 480) == box

    @settings(max_examples=200, deadline=None)
    @given(
        x0=st.integers(0, 500), y0=st.integers(0, 400),
        w=st.integers(1, 200), h=st.integers(1, 200),
        margin=st.floats(1.0, 3.0),
    )
    def test_output_always_valid(self, x0, y0, w, h, margin):
        image_w, image_h = 800, 700
        box = BoundingBox(x0, y0, min(x0 + w, image_w), min(y0 + h, image_h))
        out = expand_and_square_box(box, margin, image_w, image_h)
        assert 0 <= out.x0 < out.x1 <= image_w
        assert 0 <= out.y0 < out.y1 <= image_h

    @settings(max_examples=100, deadline=None)
    @given(x0=st.integers(0, 400), y0=st.integers(0, 300), side=st.integers(1, 150))
    def test_margin_one_square_identity_property(self, x0, y0, side):
        box = BoundingBox(x0, y0, x0 + side, y0 + side)
        assert expand_and_square_box(box, 1.0, 600, 500) == box

    def test_contains_original_when_unclamped(self):
        box = BoundingBox(100, 120, 160, 150)
        out = expand_and_square_box(box, 1.3, 640, 480)
        assert out.x0 <= box.x0 and out.x1 >= box.x1
        assert out.y0 <= box.y0 and out.y1 >= box.y1


class TestSampling:
    def test_all_frames_when_under_cap(self):
        assert sample_frame_indices(0, 30, 64) == list(range(30))

    def test_every_tenth_when_ten_to_one(self):
        indices = sample_frame_indices(0, 640, 64)
        assert indices == [10 * k for k in range(64)]

    def test_single_frame(self):
        assert sample_frame_indices(5, 1, 64) == [5]

    def test_unique_and_sorted(self):
        for count in (65, 100, 129, 1000):
            indices = sample_frame_indices(7, count, 64)
            assert len(indices) == len(set(indices)) == 64
            assert indices == sorted(indices)
            assert indices[0] == 7
            assert indices[-1] < 7 + count

    def test_sample_shot_frames(self, three_shot_fixture):
        shot = Shot(index=1, start=4.0, end=9.0)
        frames = sample_shot_frames(three_shot_fixture.media, shot, 64)
        assert len(frames) == 40  # 5s at 8fps
        assert frames[0].index == 32
        assert frames[0].timestamp == 4.0
        assert frames[-1].index == 71

    def test_sample_respects_cap(self, three_shot_fixture):
        shot = Shot(index=0, start=0.0, end=15.0)
        frames = sample_shot_frames(three_shot_fixture.media, shot, 64)
        assert len(frames) == 64
        assert len({f.index for f in frames}) == 64


def observation(x0=0, y0=0, ts=0.0, color=(255, 0, 0), shot_index=0, size=16):
    crop = np.zeros((size, size, 3), np.uint8)
    crop[:] = color
    return FaceObservation(
        shot_index=shot_index, timestamp=ts,
        box=BoundingBox(x0, y0, x0 + size, y0 + size), crop_ref=crop)


def bfs_components(similarity: np.ndarray, threshold: float) -> list[list[int]]:
    """Independent oracle: breadth-first search over the thresholded graph."""
    n = similarity.shape[0]
    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        queue = [start]
        seen[start] = True
        component = []
        while queue:
            node = queue.pop()
            component.append(node)
            for other in range(n):
                if not seen[other] and similarity[node][other] > threshold:
                    seen[other] = True
                    queue.append(other)
        components.append(sorted(component))
    return components


def as_partition(components: list[list[int]]) -> set[frozenset]:
    return {frozenset(c) for c in components}


class TestClustering:
    def test_complete_graph_single_cluster(self):
        sim = np.full((3, 3), 0.9)
        assert as_partition(similarity_components(sim, 0.8)) == {frozenset({0, 1, 2})}

    def test_transitive_connectivity(self):
        sim = np.array([
            [1.0, 0.85, 0.3],
            [0.85, 1.0, 0.85],
            [0.3, 0.85, 1.0],
        ])
        assert as_partition(similarity_components(sim, 0.8)) == {frozenset({0, 1, 2})}

    def test_exact_threshold_is_not_an_edge(self):
        sim = np.array([[1.0, 0.8], [0.8, 1.0]])
        assert as_partition(similarity_components(sim, 0.8)) == {
            frozenset({0}), frozenset({1})}

    def test_oracle_equivalence_sample(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            n = int(rng.integers(1, 33))
            sim = rng.random((n, n))
            sim = (sim + sim.T) / 2
            threshold = float(rng.uniform(0.2, 0.9))
            assert as_partition(similarity_components(sim, threshold)) == \
                as_partition(bfs_components(sim, threshold))

    def test_threshold_refinement(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 24))
            sim = rng.random((n, n))
            sim = (sim + sim.T) / 2
            low = as_partition(similarity_components(sim, 0.4))
            high = as_partition(similarity_components(sim, 0.7))
            # every high-threshold cluster sits inside one low-threshold cluster
            for cluster in high:
                assert any(cluster <= coarse for coarse in low)

    def test_cluster_faces_by_color(self):
        observations = [
            observation(x0=0, color=(255, 0, 0)),
            observation(x0=20, color=(0, 255, 0)),
            observation(x0=40, ts=1.0, color=(255, 0, 0)),
        ]
        clusters = cluster_faces(observations, MeanColorEmbedder(), 0.8)
        assert len(clusters) == 2
        assert [c.cluster_id for c in clusters] == [0, 1]
        # first cluster is the one whose earliest member is leftmost
        assert clusters[0].members[0].box.x0 == 0
        assert len(clusters[0].members) == 2  # both red faces

    def test_cluster_permutation_invariance(self):
        rng = np.random.default_rng(29)
        observations = [
            observation(x0=10 * i, ts=float(i % 3),
                        color=[(255, 0, 0), (0, 255, 0), (0, 0, 255)][i % 3])
            for i in range(9)
        ]
        base = cluster_faces(observations, MeanColorEmbedder(), 0.8)

        def signature(clusters):
            return [
                [(m.timestamp, m.box.x0) for m in c.members]
                for c in clusters
            ]

        for _ in range(5):
            shuffled = list(observations)
            rng.shuffle(shuffled)
            assert signature(cluster_faces(shuffled, MeanColorEmbedder(), 0.8)) == \
                signature(base)

    def test_empty_input(self):
        assert cluster_faces([], MeanColorEmbedder(), 0.8) == []


class TestFilterClusters:
    def cluster(self, n_members, cluster_id=0):
        members = tuple(observation(x0=4 * i, ts=float(i)) for i in range(n_members))
        return FaceCluster(cluster_id=cluster_id, members=members)

    def test_below_fraction_removed(self):
        kept = filter_clusters([self.cluster(7)], 40, 0.2)
        assert kept == []

    def test_exact_fraction_kept(self):
        clusters = [self.cluster(8)]
        assert filter_clusters(clusters, 40, 0.2) == clusters

    def test_full_presence_kept(self):
        clusters = [self.cluster(40)]
        assert filter_clusters(clusters, 40, 0.2) == clusters

    def test_never_increases_and_zero_frac_identity(self):
        clusters = [self.cluster(3, 0), self.cluster(9, 1), self.cluster(1, 2)]
        kept = filter_clusters(clusters, 10, 0.2)
        assert sum(len(c.members) for c in kept) <= sum(len(c.members) for c in clusters)
        # min_frac ~ 0 keeps everything
        assert filter_clusters(clusters, 10, 1e-9) == clusters

    def test_ids_keep_gaps(self):
        clusters = [self.cluster(1, 0), self.cluster(9, 1)]
        kept = filter_clusters(clusters, 10, 0.2)
        assert [c.cluster_id for c in kept] == [1]


class TestMarkerDetector:
    def frame_with_markers(self):
        pixels = np.zeros((120, 160, 3), np.uint8)
        pixels[:] = (60, 60, 60)
        pixels[10:40, 20:50] = (255, 0, 0)
        pixels[60:100, 90:140] = (0, 255, 255)
        return FrameSample(index=0, timestamp=0.0, pixels=pixels)

    def test_detects_planted_markers(self):
        detections = MarkerFaceDetector().detect(self.frame_with_markers())
        boxes = [b for b, _ in detections]
        assert BoundingBox(20, 10, 50, 40) in boxes
        assert BoundingBox(90, 60, 140, 100) in boxes
        assert len(boxes) == 2

    def test_no_markers_empty(self):
        pixels = np.zeros((60, 60, 3), np.uint8)
        pixels[:] = (100, 100, 100)
        frame = FrameSample(index=0, timestamp=0.0, pixels=pixels)
        assert MarkerFaceDetector().detect(frame) == []

    def test_detect_faces_expands_boxes(self, config):
        frame = self.frame_with_markers()
        observations = detect_faces([frame], MarkerFaceDetector(), config, shot_index=3)
        assert len(observations) == 2
        assert all(o.shot_index == 3 for o in observations)
        expected = expand_and_square_box(BoundingBox(20, 10, 50, 40), 1.3, 160, 120)
        assert observations[0].box == expected
        crop = observations[0].crop_ref
        assert crop.shape[:2] == (expected.height, expected.width)

    def test_detector_failure_skips_frame(self, config):
        class FlakyDetector:
            def __init__(self):
                self.calls = 0

            def detect(self, frame):
                self.calls += 1
                if self.calls == 1:
                    raise RuntimeError("boom")
                return MarkerFaceDetector().detect(frame)

        frames = [self.frame_with_markers(), self.frame_with_markers()]
        observations = detect_faces(frames, FlakyDetector(), config, shot_index=0)
        assert len(observations) == 2  # second frame still contributed

    def test_count_conservation(self, config):
        frames = [self.frame_with_markers() for _ in range(5)]
        observations = detect_faces(frames, MarkerFaceDetector(), config, shot_index=0)
        assert len(observations) == 10


class TestMeanColorEmbedder:
    def test_unit_norm(self):
        crop = np.zeros((8, 8, 3), np.uint8)
        crop[:] = (10, 200, 35)
        v = MeanColorEmbedder().embed(crop)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)

    def test_same_color_same_embedding(self):
        a = np.zeros((8, 8, 3), np.uint8)
        a[:] = (255, 0, 0)
        b = np.zeros((20, 20, 3), np.uint8)
        b[:] = (255, 0, 0)
        embedder = MeanColorEmbedder()
        assert np.allclose(embedder.embed(a), embedder.embed(b))

    def test_black_crop_stable(self):
        crop = np.zeros((4, 4, 3), np.uint8)
        v = MeanColorEmbedder().embed(crop)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
