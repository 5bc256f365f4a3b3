import numpy as np
import pytest

from boolfact.ingest import (
    DATASET_SHAPES,
    CategoricalSchema,
    IngestError,
    expand,
    load_dataset,
    load_spect,
    load_tumor,
    load_voting,
)

VOTES = ["y", "n", "?"]


def write_voting(path, rows=435, seed=0):
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(rows):
        party = rng.choice(["republican", "democrat"])
        lines.append(",".join([party] + list(rng.choice(VOTES, 16))))
    path.write_text("\n".join(lines) + "\n")
    return lines


def write_tumor(path, rows=339, seed=0):
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(rows):
        fields = [str(rng.integers(1, 23))]
        fields += [rng.choice(["1", "2", "3", "?"]), rng.choice(["1", "2", "?"])]
        fields += [rng.choice(["1", "2", "3", "?"]) for _ in range(2)]
        fields += [rng.choice(["1", "2", "?"]) for _ in range(13)]
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")
    return lines


def write_spect(dir_, seed=0):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 2, (267, 23))
    (dir_ / "SPECT.train").write_text("\n".join(",".join(map(str, r)) for r in rows[:80]) + "\n")
    (dir_ / "SPECT.test").write_text("\n".join(",".join(map(str, r)) for r in rows[80:]) + "\n")
    return rows


class TestSchema:
    def test_parse(self):
        s = CategoricalSchema.parse("@missing = -\nlab = label\na = categorical x y z  # note\nb = boolean t f\n")
        assert s.missing_token == "-"
        assert s.width == 4
        assert s.feature_names() == ["a=x", "a=y", "a=z", "b"]

    @pytest.mark.parametrize(
        "text", ["a = widget", "a = categorical", "a = boolean t", "a = categorical x x", "junk"]
    )
    def test_bad(self, text):
        with pytest.raises(ValueError):
            CategoricalSchema.parse(text)

    @pytest.mark.parametrize("name", sorted(DATASET_SHAPES))
    def test_builtin_widths(self, name):
        assert CategoricalSchema.builtin(name).width == DATASET_SHAPES[name][1]


class TestExpand:
    schema = CategoricalSchema.parse("lab = label\nc = categorical a b c\nd = boolean 1 0\n")

    def test_one_hot(self):
        X = expand([["L", "b", "1"], ["L", "c", "0"]], self.schema)
        assert X.tolist() == [[0, 1, 0, 1], [0, 0, 1, 0]]

    def test_missing_is_all_zero(self):
        X = expand([["L", "?", "?"]], self.schema)
        assert X.tolist() == [[0, 0, 0, 0]]

    def test_bad_token_names_location(self):
        with pytest.raises(IngestError, match=r"row 2, column c: unexpected token 'q'"):
            expand([["L", "a", "1"], ["L", "q", "1"]], self.schema)
        with pytest.raises(IngestError, match=r"column d"):
            expand([["L", "a", "2"]], self.schema)

    def test_wrong_field_count(self):
        with pytest.raises(IngestError, match="expected 3 fields"):
            expand([["L", "a"]], self.schema)

    def test_boolean_pass_through(self):
        rng = np.random.default_rng(0)
        table = rng.integers(0, 2, (30, 7))
        X = expand([[str(v) for v in row] for row in table], CategoricalSchema.all_boolean(7))
        assert np.array_equal(X.array, table)


class TestLoaders:
    def test_voting(self, tmp_path):
        lines = write_voting(tmp_path / "house-votes-84.data")
        X = load_voting(tmp_path / "house-votes-84.data")
        assert X.shape == (435, 32)
        groups = X.array.reshape(435, 16, 2)
        assert groups.sum(axis=2).max() <= 1
        first = lines[0].split(",")[1:]
        for g, tok in enumerate(first):
            assert groups[0, g].tolist() == {"y": [1, 0], "n": [0, 1], "?": [0, 0]}[tok]

    def test_tumor(self, tmp_path):
        write_tumor(tmp_path / "primary-tumor.data")
        X = load_tumor(tmp_path / "primary-tumor.data")
        assert X.shape == (339, 24)
        A = X.array
        for lo, hi in [(0, 3), (3, 5), (5, 8), (8, 11)]:
            assert A[:, lo:hi].sum(axis=1).max() <= 1

    def test_spect(self, tmp_path):
        rows = write_spect(tmp_path)
        X = load_spect([tmp_path / "SPECT.train", tmp_path / "SPECT.test"])
        assert np.array_equal(X.array, rows[:, 1:])

    def test_shape_mismatch(self, tmp_path):
        write_voting(tmp_path / "house-votes-84.data", rows=10)
        with pytest.raises(IngestError, match=r"expected a 435x32 matrix, found 10x32"):
            load_voting(tmp_path / "house-votes-84.data")

    def test_load_dataset(self, tmp_path):
        write_voting(tmp_path / "house-votes-84.data")
        assert load_dataset("voting", tmp_path).shape == (435, 32)
        with pytest.raises(FileNotFoundError):
            load_dataset("spect", tmp_path)
        with pytest.raises(ValueError):
            load_dataset("iris", tmp_path)
