import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from propsvm.data import (
    BagPartition,
    ConfigError,
    Dataset,
    ParseError,
    compute_proportions,
    generate_bags,
    kfold_over_bags,
    parse_sparse_dataset,
    partition_from_json,
    partition_to_json,
    restrict_to_bags,
    scale_attributes,
)

SAMPLE = """\
# three instances, three attributes
+1 1:0.5 3:-1.25
-1 2:2e-1
+1 1:1 2:2 3:3  # trailing comment
"""


def test_parse_fills_dense_rows():
    ds = parse_sparse_dataset(SAMPLE)
    assert ds.n == 3 and ds.dim == 3
    assert_allclose(
        ds.features,
        [[0.5, 0.0, -1.25], [0.0, 0.2, 0.0], [1.0, 2.0, 3.0]],
    )
    assert_array_equal(ds.labels, [1.0, -1.0, 1.0])


def test_parse_from_file(tmp_path):
    path = tmp_path / "tiny.svm"
    path.write_text(SAMPLE)
    for src in (path, str(path)):
        ds = parse_sparse_dataset(src)
        assert ds.n == 3


def test_parse_errors_name_the_line():
    with pytest.raises(ParseError, match="line 2.*not numeric"):
        parse_sparse_dataset("+1 1:1\nspam 1:1\n")
    with pytest.raises(ParseError, match="line 1.*malformed"):
        parse_sparse_dataset("+1 1:one\n")
    with pytest.raises(ParseError, match="line 3.*strictly increasing"):
        parse_sparse_dataset("+1 1:1\n-1 1:1\n+1 2:1 2:2\n")
    with pytest.raises(ParseError, match="must be >= 1"):
        parse_sparse_dataset("+1 0:1\n")
    with pytest.raises(ParseError, match="no instances"):
        parse_sparse_dataset("# only a comment\n\n")


def test_parse_label_mapping():
    text = "2 1:1\n4 1:2\n"
    ds = parse_sparse_dataset(text, label_map={2: 1, 4: -1})
    assert_array_equal(ds.labels, [1.0, -1.0])
    # both raw labels positive: sign mapping would collapse them
    with pytest.raises(ParseError, match="do not split by sign"):
        parse_sparse_dataset(text)
    with pytest.raises(ParseError, match="missing from label_map"):
        parse_sparse_dataset(text, label_map={2: 1})


def test_parse_sign_mapping_accepts_0_1_style():
    # 0/neg raw labels land on -1
    ds = parse_sparse_dataset("1 1:1\n-3 1:2\n")
    assert_array_equal(ds.labels, [1.0, -1.0])


def test_dataset_validation():
    with pytest.raises(ValueError, match="2-D"):
        Dataset(np.zeros(3))
    with pytest.raises(ValueError, match="labels must be -1 or \\+1"):
        Dataset(np.zeros((2, 1)), [1.0, 0.5])
    with pytest.raises(ValueError, match="2 labels for 3"):
        Dataset(np.zeros((3, 1)), [1.0, -1.0])
    ds = Dataset(np.zeros((2, 1)), [1, -1])
    assert ds.labels.dtype == np.float64
    assert ds.without_labels().labels is None


def test_bag_partition_validation():
    with pytest.raises(ValueError, match="at least one bag"):
        BagPartition((), (), 0)
    with pytest.raises(ValueError, match="bag 1 is empty"):
        BagPartition(((0, 1), ()), (0.5, 0.5), 2)
    with pytest.raises(ValueError, match="disjointly cover"):
        BagPartition(((0, 1), (1, 2)), (0.5, 0.5), 4)
    with pytest.raises(ValueError, match="2 proportions for 1"):
        BagPartition(((0, 1),), (0.5, 0.5), 2)
    with pytest.raises(ValueError, match="\\[0, 1\\]"):
        BagPartition(((0, 1),), (1.5,), 2)
    part = BagPartition(((1, 0), (2,)), (0.5, 1.0), 3)
    assert part.n_bags == 2
    assert_array_equal(part.bag_sizes(), [2, 1])


def test_scale_attributes_maps_to_unit_interval():
    ds = Dataset(
        np.array([[0.0, 5.0, 7.0], [10.0, 5.0, 3.0], [5.0, 5.0, 5.0]]),
        [1, -1, 1],
    )
    scaled = scale_attributes(ds)
    assert_allclose(scaled.features.min(axis=0), [-1.0, 0.0, -1.0])
    assert_allclose(scaled.features.max(axis=0), [1.0, 0.0, 1.0])
    # constant column collapses to zero, labels ride along untouched
    assert_allclose(scaled.features[:, 1], 0.0)
    assert_array_equal(scaled.labels, ds.labels)


def test_compute_proportions():
    labels = np.array([1, 1, -1, -1, 1, -1])
    assert_allclose(
        compute_proportions(labels, [np.array([0, 1, 2]), np.array([3, 4, 5])]),
        [2 / 3, 1 / 3],
    )


def test_generate_bags_shapes(rng):
    ds = Dataset(np.zeros((10, 2)), [1, 1, 1, 1, 1, -1, -1, -1, -1, -1])
    part = generate_bags(ds, 4, rng)
    assert_array_equal(part.bag_sizes(), [4, 4, 2])
    merged = np.sort(np.concatenate(part.bags))
    assert_array_equal(merged, np.arange(10))
    assert_allclose(part.proportions, compute_proportions(ds.labels, part.bags))


def test_generate_bags_edge_cases(rng):
    ds = Dataset(np.zeros((5, 1)), [1, -1, 1, -1, 1])
    assert generate_bags(ds, 99, rng).n_bags == 1
    with pytest.raises(ConfigError, match=">= 1"):
        generate_bags(ds, 0, rng)
    with pytest.raises(ValueError, match="labeled"):
        generate_bags(ds.without_labels(), 2, rng)


def test_generate_bags_deterministic():
    ds = Dataset(np.zeros((9, 1)), [1, -1, 1, -1, 1, -1, 1, -1, 1])
    a = generate_bags(ds, 3, np.random.default_rng(7))
    b = generate_bags(ds, 3, np.random.default_rng(7))
    for ba, bb in zip(a.bags, b.bags):
        assert_array_equal(ba, bb)


def test_kfold_over_bags(rng):
    part = BagPartition(
        tuple((i,) for i in range(7)), (0, 1, 0, 1, 0, 1, 0), 7
    )
    splits = kfold_over_bags(part, 3, rng)
    assert [s.fold for s in splits] == [0, 1, 2]
    all_test = np.sort(np.concatenate([s.test_bags for s in splits]))
    assert_array_equal(all_test, np.arange(7))
    for s in splits:
        assert np.intersect1d(s.train_bags, s.test_bags).size == 0
        assert_array_equal(s.train_bags, np.sort(s.train_bags))
    with pytest.raises(ConfigError, match="at least 2 folds"):
        kfold_over_bags(part, 1, rng)
    with pytest.raises(ConfigError, match="cannot fill"):
        kfold_over_bags(part, 8, rng)


def test_restrict_to_bags():
    ds = Dataset(np.arange(12.0).reshape(6, 2), [1, 1, -1, -1, 1, -1])
    part = BagPartition(((0, 1), (2, 3), (4, 5)), (1.0, 0.0, 0.5), 6)
    sub, subpart, rows = restrict_to_bags(ds, part, [2, 0])
    assert_array_equal(rows, [4, 5, 0, 1])
    assert_allclose(sub.features, ds.features[[4, 5, 0, 1]])
    assert_array_equal(sub.labels, [1, -1, 1, 1])
    assert_allclose(subpart.proportions, [0.5, 1.0])
    assert_array_equal(subpart.bags[0], [0, 1])
    assert_array_equal(subpart.bags[1], [2, 3])
    # label-free input stays label-free
    unl, _, _ = restrict_to_bags(ds.without_labels(), part, [0])
    assert unl.labels is None


def test_partition_json_round_trip():
    part = BagPartition(((3, 1), (0, 2, 4)), (0.5, 1 / 3), 5)
    text = partition_to_json(part)
    back = partition_from_json(text)
    assert back.n == 5
    for a, b in zip(back.bags, part.bags):
        assert_array_equal(a, b)
    assert_allclose(back.proportions, part.proportions)
    assert partition_to_json(back) == text
    with pytest.raises(ParseError, match="bad partition JSON"):
        partition_from_json("{\"bags\": 3}")
