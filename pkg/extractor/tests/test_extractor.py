import numpy as np
import pytest

import mediarank
from mediaextract import (
    Backbone,
    EmbeddingRecord,
    ExtractionJob,
    MediaError,
    extract_image,
    extract_video,
    sample_frame_indices,
    write_mrf1,
)
from mediaextract.cli import run


class TestSamplingParity:
    def test_bit_identical_to_engine_rule(self):
        """The frame picker must agree with the retrieval engine for all
        tested (total, target) pairs."""
        cases = [(n, t) for n in (1, 2, 9, 10, 16, 17, 31, 32, 100, 301)
                 for t in (1, 3, 15, 16, 24)]
        for total, target in cases:
            assert sample_frame_indices(total, target) == mediarank.sample_frame_indices(
                total, target
            ), (total, target)


class TestBackbone:
    def test_output_dim_1024(self, backbone):
        frame = np.zeros((224, 224, 3), dtype=np.float32)
        assert backbone.embed(frame).shape == (1024,)

    def test_deterministic(self, backbone):
        rng = np.random.default_rng(3)
        frame = rng.uniform(-1, 1, (224, 224, 3)).astype(np.float32)
        assert np.array_equal(backbone.embed(frame), backbone.embed(frame.copy()))

    def test_distinguishes_content(self, backbone):
        rng = np.random.default_rng(4)
        a = rng.uniform(-1, 1, (224, 224, 3)).astype(np.float32)
        b = rng.uniform(-1, 1, (224, 224, 3)).astype(np.float32)
        assert not np.allclose(backbone.embed(a), backbone.embed(b))

    def test_seed_selects_weights(self):
        frame = np.ones((96, 96, 3), dtype=np.float32) * 0.5
        v1 = Backbone(seed=1).embed(frame)
        v2 = Backbone(seed=2).embed(frame)
        assert not np.allclose(v1, v2)

    def test_identifier_names_seed(self):
        assert "1924" in Backbone().identifier

    def test_npz_weights_round_trip(self, tmp_path, backbone):
        params = {}
        for name, shape in Backbone._param_shapes():
            params[name] = np.zeros(shape, dtype=np.float32)
        bundle = tmp_path / "weights.npz"
        np.savez(bundle, **params)
        zeroed = Backbone(weights_path=bundle)
        frame = np.ones((64, 64, 3), dtype=np.float32)
        assert np.allclose(zeroed.embed(frame), 0.0)
        assert "weights.npz" in zeroed.identifier

    def test_npz_rejects_bad_shapes(self, tmp_path):
        params = {name: np.zeros(shape, dtype=np.float32)
                  for name, shape in Backbone._param_shapes()}
        params["dw3_w"] = np.zeros((3, 3, 7), dtype=np.float32)
        bundle = tmp_path / "bad.npz"
        np.savez(bundle, **params)
        with pytest.raises(ValueError, match="dw3_w"):
            Backbone(weights_path=bundle)


class TestExtractOperations:
    def test_image_record_shape(self, image_dir, backbone):
        record = extract_image(image_dir / "img00.png", backbone)
        assert record.kind == 0
        assert record.frames.shape == (1, 1024)

    def test_image_determinism(self, image_dir, backbone):
        a = extract_image(image_dir / "img01.png", backbone)
        b = extract_image(image_dir / "img01.png", backbone)
        assert np.array_equal(a.frames, b.frames)

    def test_video_record_16_frames(self, video_dir, backbone):
        record = extract_video(video_dir / "clip-a.avi", backbone, n_frames=16)
        assert record.kind == 1
        assert record.frames.shape == (16, 1024)

    def test_short_video_repeats_frames(self, video_dir, backbone):
        record = extract_video(video_dir / "clip-short.avi", backbone, n_frames=16)
        assert record.frames.shape == (16, 1024)
        # 12 source frames into 16 slots: indices 0,0,1,... so row 0 == row 1
        assert np.array_equal(record.frames[0], record.frames[1])

    def test_image_as_one_frame_video(self, image_dir, backbone):
        record = extract_video(image_dir / "img00.png", backbone, n_frames=16)
        assert record.frames.shape == (16, 1024)
        assert all(np.array_equal(record.frames[0], row) for row in record.frames)

    def test_corrupt_image_raises_media_error(self, image_dir, backbone):
        with pytest.raises(MediaError):
            extract_image(image_dir / "broken.png", backbone)


class TestJob:
    def test_batch_continues_past_corrupt_file(self, image_dir, tmp_path, backbone):
        out = tmp_path / "images.mrf1"
        job = ExtractionJob.for_directory(image_dir, "image", out, backbone=backbone)
        report = job.run()
        assert len(report.written) == 5
        assert len(report.errors) == 1
        assert "broken.png" in report.errors[0][0]
        assert out.exists()

    def test_writer_rejects_duplicate_ids(self, tmp_path):
        frames = np.zeros((1, 4), dtype=np.float32)
        records = [
            EmbeddingRecord("same", 0, frames),
            EmbeddingRecord("same", 0, frames),
        ]
        with pytest.raises(ValueError):
            write_mrf1(records, tmp_path / "dup.mrf1")


class TestAcceptanceA10:
    """A10: >=5 images and >=2 short videos -> MRF1 the engine loads, dim
    1024, exactly 16 frames per video, byte-identical re-runs."""

    def test_images_end_to_end(self, image_dir, tmp_path, backbone):
        out1 = tmp_path / "images-1.mrf1"
        out2 = tmp_path / "images-2.mrf1"
        for out in (out1, out2):
            job = ExtractionJob.for_directory(image_dir, "image", out, backbone=backbone)
            report = job.run()
            assert len(report.written) >= 5
        records = mediarank.read_embeddings(out1)
        assert len(records) == 5
        for record in records:
            assert record.kind is mediarank.MediaKind.IMAGE
            assert record.frames.dim == 1024
            assert record.frames.n_frames == 1
        assert out1.read_bytes() == out2.read_bytes()
        print("\nA10(images) PASS: 5 image records, dim 1024, re-run identical")

    def test_videos_end_to_end(self, video_dir, tmp_path, backbone):
        out1 = tmp_path / "videos-1.mrf1"
        out2 = tmp_path / "videos-2.mrf1"
        for out in (out1, out2):
            job = ExtractionJob.for_directory(
                video_dir, "video", out, n_frames=16, backbone=backbone
            )
            report = job.run()
            assert report.errors == []
            assert len(report.written) >= 2
        records = mediarank.read_embeddings(out1)
        assert len(records) == 3
        for record in records:
            assert record.kind is mediarank.MediaKind.VIDEO
            assert record.frames.dim == 1024
            assert record.frames.n_frames == 16
        assert out1.read_bytes() == out2.read_bytes()
        print("\nA10(videos) PASS: video records carry 16 frames of dim 1024, re-run identical")

    def test_extracted_corpus_is_indexable(self, image_dir, video_dir, tmp_path, backbone):
        """The emitted files drive the primary engine end to end."""
        img_out = tmp_path / "img.mrf1"
        vid_out = tmp_path / "vid.mrf1"
        ExtractionJob.for_directory(image_dir, "image", img_out, backbone=backbone).run()
        ExtractionJob.for_directory(video_dir, "video", vid_out, backbone=backbone).run()
        records = mediarank.read_embeddings(img_out) + mediarank.read_embeddings(vid_out)
        strategy = mediarank.AggregationStrategy(mediarank.AggregationKind.MEAN_POOL)
        repo = mediarank.build_index(records, strategy)
        pairs = repo.vector_items()
        for item_id, item in repo.items():
            result = mediarank.rank_euclidean(item.vector, pairs, 1)
            assert result.ids() == (item_id,)
            assert result.entries[0].distance == 0.0


class TestCli:
    def test_extract_images_cli(self, image_dir, tmp_path, capsys):
        out = tmp_path / "cli.mrf1"
        code = run(["extract", "--images", str(image_dir), "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr()
        assert "wrote 5 records" in stdout.out
        assert "broken.png" in stdout.err

    def test_extract_videos_cli(self, video_dir, tmp_path, capsys):
        out = tmp_path / "cli-vid.mrf1"
        code = run(
            ["extract", "--videos", str(video_dir), "--frames", "16", "--out", str(out)]
        )
        assert code == 0
        assert len(mediarank.read_embeddings(out)) == 3

    def test_missing_directory(self, tmp_path):
        assert run(["extract", "--images", str(tmp_path / "none"), "--out", "x.mrf1"]) == 2

    def test_empty_directory(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run(["extract", "--images", str(empty), "--out", str(tmp_path / "x.mrf1")]) == 2
