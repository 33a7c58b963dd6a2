import numpy as np
import pytest
from PIL import Image

from convneat.genome import ConnectionGene
from convneat.phenotype import ImageMatrix, compile_genome
from convneat.tasks import (
    DecodeError,
    ManifestError,
    bars_conv_seed,
    bars_task,
    fit_to_dims,
    image_classification_task,
    load_image,
    parse_manifest,
    xor_task,
)

from conftest import make_minimal, random_genome


class FakePhenotype:
    """Stands in for a compiled network with a fixed scalar output."""

    def __init__(self, value):
        self.value = value

    def forward_batch(self, stack):
        return np.full((len(stack), 1), self.value)


class TestXorTask:
    def test_perfect_outputs(self):
        class Oracle:
            def forward_batch(self, stack):
                flat = stack.reshape(len(stack), -1)
                out = (flat[:, 0] != flat[:, 1]).astype(float)
                return out[:, None]

        assert xor_task().evaluate(Oracle()) == 16.0

    def test_constant_half(self):
        assert xor_task().evaluate(FakePhenotype(0.5)) == pytest.approx(4.0)

    def test_exactly_wrong(self):
        class Inverted:
            def forward_batch(self, stack):
                flat = stack.reshape(len(stack), -1)
                out = (flat[:, 0] == flat[:, 1]).astype(float)
                return out[:, None]

        assert xor_task().evaluate(Inverted()) == 0.0

    def test_target(self):
        assert xor_task().fitness_target == 15.0


class TestBarsTask:
    def test_constant_zero_is_half(self):
        task = bars_task(8, 10, seed=1)
        assert task.evaluate(FakePhenotype(0.0)) == 0.5

    def test_same_seed_identical_dataset(self):
        a = bars_task(8, 5, seed=3)
        b = bars_task(8, 5, seed=3)
        probe = random_genome(0, num_inputs=64, num_outputs=1, steps=3)
        p = compile_genome(probe, 8, 8)
        assert a.evaluate(p) == b.evaluate(p)

    def test_size_too_small(self):
        with pytest.raises(ValueError):
            bars_task(3, 1, 0)

    def test_hand_built_detector_on_noise_free_bars(self):
        # explicit genome comparing row sums against column hits: a 1x5 ones
        # kernel gives ~5 on a horizontal bar's row but ~1 on a vertical bar,
        # and max pooling exposes that peak to the output node
        from convneat.genome import ConvStageGene

        size = 8
        seed = [
            ConvStageGene(stage_index=0, kernel=[[1.0] * 5], stride=1,
                          pooler="none", pool_window=2, activation="linear"),
            ConvStageGene(stage_index=1, kernel=[[1.0]], stride=1,
                          pooler="max", pool_window=4, activation="linear"),
        ]
        flat = 2  # two pooled row-band maxima
        g = make_minimal(flat, 1, conv_seed=seed, output_activation="sigmoid",
                         input_height=size, input_width=size)
        bias_id = g.node_ids("bias")[0]
        g.connections = [
            ConnectionGene(c.innovation, c.src, c.dst,
                           3.0 if c.src == bias_id else -1.0, True)
            for c in g.connections
        ]
        p = compile_genome(g, size, size)

        images, labels = [], []
        for pos in range(size):
            horizontal = np.zeros((size, size))
            horizontal[pos, :] = 1.0
            images.append(horizontal)
            labels.append(0)
            vertical = np.zeros((size, size))
            vertical[:, pos] = 1.0
            images.append(vertical)
            labels.append(1)
        outputs = p.forward_batch(np.stack(images))[:, 0]
        predictions = (outputs >= 0.5).astype(int)
        assert (predictions == np.array(labels)).mean() == 1.0

    def test_fitness_finite_for_random_genomes(self):
        task = bars_task(8, 5, seed=0)
        for s in range(10):
            g = random_genome(s, num_inputs=64, num_outputs=1, steps=6)
            fitness = task.evaluate(compile_genome(g, 8, 8))
            assert np.isfinite(fitness) and fitness >= 0.0


class TestLoadImage:
    def test_white_png(self, tmp_path):
        path = tmp_path / "white.png"
        Image.new("L", (2, 2), 255).save(path)
        img = load_image(path)
        assert np.all(img.pixels == 1.0)

    def test_black_bmp(self, tmp_path):
        path = tmp_path / "black.bmp"
        Image.new("L", (2, 2), 0).save(path)
        img = load_image(path)
        assert np.all(img.pixels == 0.0)

    def test_gray_128(self, tmp_path):
        path = tmp_path / "gray.png"
        Image.new("L", (1, 1), 128).save(path)
        img = load_image(path)
        assert img.pixels[0, 0] == pytest.approx(128 / 255)

    def test_rgb_luminance(self, tmp_path):
        path = tmp_path / "rgb.png"
        Image.new("RGB", (1, 1), (255, 0, 0)).save(path)
        img = load_image(path)
        assert img.pixels[0, 0] == pytest.approx(0.299)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_corrupt_file_names_path(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"this is not an image")
        with pytest.raises(DecodeError) as err:
            load_image(path)
        assert "bad.png" in str(err.value)

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "img.gif"
        Image.new("L", (2, 2), 10).save(path, format="GIF")
        with pytest.raises(DecodeError):
            load_image(path)


class TestFitToDims:
    def test_checkerboard_downscale_index_mapping(self):
        src = np.array([[(r + c) % 2 for c in range(4)] for r in range(4)], float)
        out = fit_to_dims(ImageMatrix.from_array(src), 2, 2)
        expected = [[src[(i * 4) // 2][(j * 4) // 2] for j in range(2)]
                    for i in range(2)]
        assert out.pixels.tolist() == expected

    def test_identity_when_dims_match(self):
        src = np.random.default_rng(0).uniform(0, 1, (5, 5))
        out = fit_to_dims(ImageMatrix.from_array(src), 5, 5)
        assert np.array_equal(out.pixels, src)


class TestManifest:
    def make_dataset(self, tmp_path, records):
        lines = ["# test dataset"]
        for name, value, label in records:
            Image.new("L", (4, 4), value).save(tmp_path / name)
            lines.append(f"{name},{label}")
        manifest = tmp_path / "data.csv"
        manifest.write_text("\n".join(lines), encoding="utf-8")
        return manifest

    def test_parse(self, tmp_path):
        manifest = self.make_dataset(
            tmp_path, [("a.png", 255, 0), ("b.png", 0, 1)])
        parsed = parse_manifest(manifest)
        assert [label for _, label in parsed.records] == [0, 1]

    def test_bad_label(self, tmp_path):
        manifest = tmp_path / "m.csv"
        manifest.write_text("a.png,2\n")
        with pytest.raises(ManifestError):
            parse_manifest(manifest)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_manifest(tmp_path / "absent.csv")

    def test_single_image_perfect_prediction(self, tmp_path):
        manifest = parse_manifest(
            self.make_dataset(tmp_path, [("a.png", 255, 1)]))
        task = image_classification_task(manifest, 4, 4)
        assert task.evaluate(FakePhenotype(0.9)) == 1.0

    def test_opposite_labels_constant_phenotype(self, tmp_path):
        manifest = parse_manifest(
            self.make_dataset(tmp_path, [("a.png", 255, 0), ("b.png", 0, 1)]))
        task = image_classification_task(manifest, 4, 4)
        assert task.evaluate(FakePhenotype(0.9)) == 0.5

    def test_undecodable_image_fails_construction(self, tmp_path):
        (tmp_path / "broken.png").write_bytes(b"junk")
        manifest = tmp_path / "m.csv"
        manifest.write_text("broken.png,0\n")
        with pytest.raises(ManifestError) as err:
            image_classification_task(parse_manifest(manifest), 4, 4)
        assert "broken.png" in str(err.value)

    def test_accuracy_invariant_under_record_order(self, tmp_path):
        manifest = self.make_dataset(
            tmp_path,
            [("a.png", 255, 0), ("b.png", 0, 1), ("c.png", 128, 1)])
        forward = parse_manifest(manifest)
        reversed_manifest = tmp_path / "rev.csv"
        reversed_manifest.write_text(
            "\n".join(f"{p.name},{label}" for p, label in reversed(forward.records)))
        ta = image_classification_task(forward, 4, 4)
        tb = image_classification_task(parse_manifest(reversed_manifest), 4, 4)
        g = random_genome(1, num_inputs=16, num_outputs=1, steps=4)
        p = compile_genome(g, 4, 4)
        assert ta.evaluate(p) == tb.evaluate(p)
