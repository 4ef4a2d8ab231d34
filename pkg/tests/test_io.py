import numpy as np
import pytest

from sight.encoding import SpikeEncoder
from sight.exceptions import CompatibilityError, ParseError
from sight.graph import normalize_adjacency
from sight.io import load_checkpoint, load_dataset, save_checkpoint, save_dataset
from sight.lif import LifParams
from sight.network import init_params


class TestDataset:
    def test_round_trip(self, toy_dataset, tmp_path):
        g, m = toy_dataset
        path = tmp_path / "d.txt"
        save_dataset(g, m, path)
        g2, m2 = load_dataset(path)
        assert g2.equals(g) and m2.equals(m)
        assert g2.features.tobytes() == g.features.tobytes()

    def test_byte_stable(self, toy_dataset, tmp_path):
        g, m = toy_dataset
        save_dataset(g, m, tmp_path / "a.txt")
        g2, m2 = load_dataset(tmp_path / "a.txt")
        save_dataset(g2, m2, tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_empty_edges(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("SIGHT-GRAPH v1 2 1 2\n0 0.5\n1 1.5\nEDGES\nLABELS\n0\n1\nSPLITS\ntrain\ntrain\n")
        g, m = load_dataset(path)
        assert g.num_edges == 0
        np.testing.assert_array_equal(normalize_adjacency(g).toarray(), np.eye(2))

    def _write(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        return path

    GOOD = ["SIGHT-GRAPH v1 2 1 2", "0 0.5", "1 1.5", "EDGES", "0 1", "LABELS", "0", "1",
            "SPLITS", "train", "val"]

    @pytest.mark.parametrize("lineno,replacement,match", [
        (1, "SIGHT-GRAPH v2 2 1 2", "header"),
        (2, "0 0.5 0.7", "features"),
        (3, "0 1.5", "out of order"),
        (3, "1 abc", "non-numeric"),
        (3, "1 nan", "non-finite"),
        (5, "0 7", "outside"),
        (8, "2", "label 2"),
        (11, "test", "unknown split"),
    ])
    def test_errors_name_line(self, tmp_path, lineno, replacement, match):
        lines = list(self.GOOD)
        lines[lineno - 1] = replacement
        with pytest.raises(ParseError, match=match) as info:
            load_dataset(self._write(tmp_path, "\n".join(lines) + "\n"))
        assert info.value.line == lineno
        assert str(lineno) in str(info.value)

    def test_truncated(self, tmp_path):
        with pytest.raises(ParseError, match="unexpected end"):
            load_dataset(self._write(tmp_path, "\n".join(self.GOOD[:7]) + "\n"))

    def test_trailing_content(self, tmp_path):
        with pytest.raises(ParseError, match="after SPLITS"):
            load_dataset(self._write(tmp_path, "\n".join(self.GOOD + ["junk"]) + "\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_dataset(tmp_path / "nope.txt")


class TestCheckpoint:
    @pytest.fixture
    def params(self):
        lif = LifParams(beta=0.8, threshold=0.6, reset="subtract")
        return init_params(5, 3, (4, 2), seed=3, lif_pred=lif, gamma=0.25, pc_iters=7, timesteps=9)

    def test_exact_round_trip(self, params, tmp_path, rng):
        enc = SpikeEncoder(timesteps=9, seed=4).fit(rng.normal(size=(10, 5)))
        path = tmp_path / "m.bin"
        save_checkpoint(path, params, enc, temperature=1.7, metadata={"note": "x"})
        ck = load_checkpoint(path)
        for a, b in zip(ck.params.weights, params.weights):
            assert a.tobytes() == b.tobytes()
        assert ck.params.layer_dims == params.layer_dims
        assert ck.params.lif_pred == params.lif_pred and ck.params.lif_err == params.lif_err
        assert (ck.params.gamma, ck.params.pc_iters, ck.params.timesteps) == (0.25, 7, 9)
        assert ck.temperature == 1.7 and ck.metadata == {"note": "x"}
        np.testing.assert_array_equal(ck.encoder.data_min_, enc.data_min_)
        np.testing.assert_array_equal(ck.encoder.data_max_, enc.data_max_)

    def test_byte_identical_resave(self, params, tmp_path):
        save_checkpoint(tmp_path / "a.bin", params)
        save_checkpoint(tmp_path / "b.bin", load_checkpoint(tmp_path / "a.bin").params)
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_missing(self, tmp_path):
        with pytest.raises(CompatibilityError):
            load_checkpoint(tmp_path / "none.bin")

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.bin").write_bytes(b"not a checkpoint at all")
        with pytest.raises(CompatibilityError):
            load_checkpoint(tmp_path / "x.bin")

    def test_truncated(self, params, tmp_path):
        save_checkpoint(tmp_path / "a.bin", params)
        raw = (tmp_path / "a.bin").read_bytes()
        (tmp_path / "a.bin").write_bytes(raw[:-8])
        with pytest.raises(CompatibilityError, match="truncated"):
            load_checkpoint(tmp_path / "a.bin")
