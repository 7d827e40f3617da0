import numpy as np
import pytest

from mvm import (
    Dataset,
    DataFormatError,
    LinearModel,
    ModelFormatError,
    MultiViewInstance,
    MvfmModel,
    MvmModel,
    SchemaError,
    ViewSchema,
    accuracy,
    deserialize_model,
    linear_predict_dataset,
    mvfm_predict_dataset,
    parse_dataset,
    predict_dataset,
    serialize_model,
    split,
    synth_generate,
    write_dataset,
)
from util import rand_instance, rand_model

SAMPLE = """# toy dataset
@schema 2 3
1 1:1:0.5 2:3:1.0
-1
1 1:2:1.0 2:1:-2.5 2:2:0.75
"""


class TestParse:
    def test_sample(self):
        ds = parse_dataset(SAMPLE)
        assert ds.schema == ViewSchema((2, 3))
        assert len(ds) == 3
        first = ds[0]
        assert first.label == 1.0
        assert first.views[0].entries == [(1, 0.5)]
        assert first.views[1].entries == [(3, 1.0)]

    def test_bare_label_line_is_empty_instance(self):
        ds = parse_dataset("@schema 2 3\n-1\n")
        assert ds[0].label == -1.0
        assert ds[0].nnz == 0

    def test_unsorted_entries_are_sorted(self):
        ds = parse_dataset("@schema 3 3\n1 1:3:1.0 1:1:2.0\n")
        assert ds[0].views[0].entries == [(1, 2.0), (3, 1.0)]

    def test_explicit_zero_dropped(self):
        ds = parse_dataset("@schema 2 2\n1 1:1:0.0 2:2:1.0\n")
        assert ds[0].views[0].entries == []
        assert ds[0].views[1].entries == [(2, 1.0)]

    def test_inline_comments(self):
        ds = parse_dataset("@schema 1 1  # two views\n1 1:1:1.0  # positive\n")
        assert len(ds) == 1

    def test_missing_header(self):
        with pytest.raises(DataFormatError, match="line 1.*@schema"):
            parse_dataset("1 1:1:0.5\n")

    def test_missing_header_empty_stream(self):
        with pytest.raises(DataFormatError, match="@schema"):
            parse_dataset("# nothing here\n")

    def test_index_out_of_range(self):
        with pytest.raises(DataFormatError, match="line 2.*position 5"):
            parse_dataset("@schema 2 3\n1 1:5:1.0\n")

    def test_view_out_of_range(self):
        with pytest.raises(DataFormatError, match="line 2.*view 3"):
            parse_dataset("@schema 2 3\n1 3:1:1.0\n")

    def test_duplicate_entry(self):
        with pytest.raises(DataFormatError, match="line 3.*duplicate entry 1:2"):
            parse_dataset("@schema 2 3\n1\n1 1:2:1.0 1:2:0.5\n")

    def test_malformed_label(self):
        with pytest.raises(DataFormatError, match="line 2.*label"):
            parse_dataset("@schema 2 3\nclick 1:1:1.0\n")

    def test_malformed_triplet(self):
        with pytest.raises(DataFormatError, match="line 2"):
            parse_dataset("@schema 2 3\n1 1:1\n")

    def test_malformed_number_in_triplet(self):
        with pytest.raises(DataFormatError, match="line 2"):
            parse_dataset("@schema 2 3\n1 1:1:abc\n")

    def test_non_finite_value(self):
        with pytest.raises(DataFormatError, match="line 2.*non-finite"):
            parse_dataset("@schema 2 3\n1 1:1:inf\n")

    def test_bad_schema_dimension(self):
        with pytest.raises(DataFormatError, match="line 1"):
            parse_dataset("@schema 2 zero\n")


class TestWrite:
    def test_round_trip_identity(self):
        ds = parse_dataset(SAMPLE)
        text = write_dataset(ds)
        assert parse_dataset(text) == ds

    def test_reserialization_is_byte_identical(self):
        ds = parse_dataset(SAMPLE)
        text = write_dataset(ds)
        assert write_dataset(parse_dataset(text)) == text

    def test_canonical_form(self):
        ds = parse_dataset("@schema 3 3\n1 1:3:1.5 1:1:2.0\n")
        assert write_dataset(ds) == "@schema 3 3\n1.0 1:1:2.0 1:3:1.5\n"

    def test_full_precision_values(self):
        value = 0.1 + 0.2  # not representable as a short decimal
        ds = Dataset(
            ViewSchema((1,)), [MultiViewInstance([[(1, value)]], 1.0)]
        )
        round_tripped = parse_dataset(write_dataset(ds))
        assert round_tripped[0].views[0].values[0] == value


class TestDataset:
    def test_instances_validated(self):
        schema = ViewSchema((2, 2))
        bad = MultiViewInstance([[(9, 1.0)], []], 1.0)
        with pytest.raises(SchemaError, match="instance 0"):
            Dataset(schema, [bad])

    def test_packed_layout(self):
        ds = parse_dataset(SAMPLE)
        indptr, gidx, vals, vview, labels = ds.packed()
        assert indptr.tolist() == [0, 2, 2, 5]
        assert labels.tolist() == [1.0, -1.0, 1.0]
        assert gidx.tolist() == [0, 5, 1, 3, 4]  # view-2 rows offset past bias
        assert vview.tolist() == [0, 1, 0, 1, 1]


class TestSynth:
    def test_deterministic(self):
        schema = ViewSchema((6, 5))
        a, teacher_a = synth_generate(schema, 2, 50, 0.4, 0.1, 77)
        b, teacher_b = synth_generate(schema, 2, 50, 0.4, 0.1, 77)
        assert write_dataset(a) == write_dataset(b)
        np.testing.assert_array_equal(teacher_a.weights, teacher_b.weights)

    def test_noiseless_teacher_scores_its_own_labels_perfectly(self):
        schema = ViewSchema((5, 4, 3))
        ds, teacher = synth_generate(schema, 2, 200, 0.5, 0.0, 5)
        scores = predict_dataset(teacher, ds)
        assert accuracy(scores, ds.labels) == 1.0

    def test_full_density_fills_every_view(self):
        schema = ViewSchema((4, 6))
        ds, _ = synth_generate(schema, 1, 30, 1.0, 0.0, 3)
        for inst in ds:
            assert [len(v) for v in inst.views] == [4, 6]

    def test_noise_flips_labels(self):
        schema = ViewSchema((5, 5))
        clean, _ = synth_generate(schema, 1, 400, 0.5, 0.0, 9)
        noisy, _ = synth_generate(schema, 1, 400, 0.5, 0.25, 9)
        flipped = np.mean(clean.labels != noisy.labels)
        assert 0.15 < flipped < 0.35

    def test_classes_roughly_balanced(self):
        schema = ViewSchema((5, 5))
        ds, _ = synth_generate(schema, 2, 500, 0.5, 0.0, 13)
        positive = np.mean(ds.labels == 1.0)
        assert 0.45 <= positive <= 0.55

    def test_invalid_parameters(self):
        schema = ViewSchema((2, 2))
        with pytest.raises(ValueError, match="density"):
            synth_generate(schema, 1, 10, 0.0, 0.0, 0)
        with pytest.raises(ValueError, match="density"):
            synth_generate(schema, 1, 10, 1.5, 0.0, 0)
        with pytest.raises(ValueError, match="noise"):
            synth_generate(schema, 1, 10, 0.5, 0.5, 0)


class TestSplit:
    def test_sizes(self):
        schema = ViewSchema((3, 3))
        ds, _ = synth_generate(schema, 1, 10, 0.6, 0.0, 1)
        train_part, holdout = split(ds, 0.8, 4)
        assert len(train_part) == 8
        assert len(holdout) == 2

    def test_disjoint_and_exhaustive(self):
        schema = ViewSchema((3, 3))
        ds, _ = synth_generate(schema, 1, 25, 0.6, 0.0, 2)
        left, right = split(ds, 0.6, 8)
        seen = [write_dataset(Dataset(schema, [inst])) for inst in left] + [
            write_dataset(Dataset(schema, [inst])) for inst in right
        ]
        original = [write_dataset(Dataset(schema, [inst])) for inst in ds]
        assert sorted(seen) == sorted(original)

    def test_seed_determinism(self):
        schema = ViewSchema((3, 3))
        ds, _ = synth_generate(schema, 1, 20, 0.6, 0.0, 3)
        a = split(ds, 0.5, 11)
        b = split(ds, 0.5, 11)
        assert write_dataset(a[0]) == write_dataset(b[0])

    def test_degenerate_fraction(self):
        schema = ViewSchema((2, 2))
        ds, _ = synth_generate(schema, 1, 10, 0.5, 0.0, 4)
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError, match="fraction"):
                split(ds, bad, 0)


class TestModelSerialization:
    def _models(self):
        rng = np.random.default_rng(21)
        schema = ViewSchema((3, 2, 4))
        yield rand_model(rng, schema, k=3)
        yield rand_model(rng, schema, k=2, augment=False)
        yield LinearModel(schema, w0=0.25, weights=rng.normal(size=schema.d))
        yield MvfmModel(
            schema, 2, w0=-0.5,
            first_order=rng.normal(size=schema.d),
            latent=rng.normal(size=(schema.d, 2)),
        )

    def test_round_trip_byte_identical(self):
        for model in self._models():
            text = serialize_model(model)
            assert serialize_model(deserialize_model(text)) == text

    def test_round_trip_predictions_bit_identical(self):
        rng = np.random.default_rng(22)
        schema = ViewSchema((3, 2, 4))
        dataset = Dataset(schema, [rand_instance(rng, schema) for _ in range(100)])
        scorers = {
            "mvm": predict_dataset,
            "linear": linear_predict_dataset,
            "mvfm": mvfm_predict_dataset,
        }
        for model in self._models():
            reloaded = deserialize_model(serialize_model(model))
            score = scorers[model.family]
            np.testing.assert_array_equal(
                score(model, dataset), score(reloaded, dataset)
            )

    def test_corrupted_header(self):
        with pytest.raises(ModelFormatError, match="header"):
            deserialize_model("mvq-model v1 mvm\nschema 2\n")

    def test_version_mismatch(self):
        with pytest.raises(ModelFormatError, match="version"):
            deserialize_model("mvm-model v2 mvm\nschema 2\n")

    def test_unknown_family(self):
        with pytest.raises(ModelFormatError, match="family"):
            deserialize_model("mvm-model v1 gbm\nschema 2\n")

    def test_truncated_payload(self):
        model = MvmModel(ViewSchema((2, 2)), 2)
        lines = serialize_model(model).splitlines()
        with pytest.raises(ModelFormatError, match="end of file"):
            deserialize_model("\n".join(lines[:-1]) + "\n")

    def test_wrong_value_count(self):
        model = MvmModel(ViewSchema((2, 2)), 2)
        lines = serialize_model(model).splitlines()
        lines[4] = "0.0 0.0 0.0"
        with pytest.raises(ModelFormatError, match="expected 2 values"):
            deserialize_model("\n".join(lines) + "\n")

    def test_non_finite_payload(self):
        model = MvmModel(ViewSchema((2, 2)), 1)
        lines = serialize_model(model).splitlines()
        lines[4] = "nan"
        with pytest.raises(ModelFormatError, match="non-finite"):
            deserialize_model("\n".join(lines) + "\n")

    def test_trailing_content_rejected(self):
        model = MvmModel(ViewSchema((2, 2)), 1)
        text = serialize_model(model) + "extra\n"
        with pytest.raises(ModelFormatError, match="trailing"):
            deserialize_model(text)

    def test_full_precision_round_trip(self):
        schema = ViewSchema((1, 1))
        weights = np.array([[0.1 + 0.2], [1.0 / 3.0], [np.pi], [np.e]])
        model = MvmModel(schema, 1, weights=weights)
        reloaded = deserialize_model(serialize_model(model))
        np.testing.assert_array_equal(reloaded.weights, model.weights)
