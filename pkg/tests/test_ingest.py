import numpy as np
import pytest

from app.core.exceptions import DataError
from app.services.ingest import IngestService


@pytest.fixture
def csv_file(tmp_path):
    def write(text: str, name: str = "data.csv"):
        path = tmp_path / name
        path.write_bytes(text.encode("utf-8"))
        return path
    return write


class TestIngestCsv:
    def test_reads_features_and_target(self, csv_file):
        data = IngestService.ingest_csv(csv_file("a,y,b\n1,0.5,2\n3,-1,4\n"), "y")

        assert data.feature_names == ("a", "b")
        assert data.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert data.targets.tolist() == [0.5, -1.0]

    def test_crlf_and_padding(self, csv_file):
        data = IngestService.ingest_csv(csv_file("x , y\r\n 1 , 2\r\n3,4\r\n"), "y")

        assert data.features.tolist() == [[1.0], [3.0]]
        assert data.targets.tolist() == [2.0, 4.0]

    def test_missing_target_column(self, csv_file):
        with pytest.raises(DataError, match="'label' not found"):
            IngestService.ingest_csv(csv_file("x,y\n1,2\n"), "label")

    def test_non_numeric_cell_is_located(self, csv_file):
        with pytest.raises(DataError, match="line 3, column 'x'"):
            IngestService.ingest_csv(csv_file("x,y\n1,2\nabc,3\n"), "y")

    def test_nan_cell_is_rejected(self, csv_file):
        with pytest.raises(DataError, match="Non-numeric"):
            IngestService.ingest_csv(csv_file("x,y\nnan,2\n"), "y")

    def test_empty_cell_is_rejected(self, csv_file):
        with pytest.raises(DataError, match="line 2"):
            IngestService.ingest_csv(csv_file("x,y\n,2\n"), "y")

    def test_duplicate_header(self, csv_file):
        with pytest.raises(DataError, match="Duplicate"):
            IngestService.ingest_csv(csv_file("x,x,y\n1,2,3\n"), "y")

    def test_empty_file(self, csv_file):
        with pytest.raises(DataError, match="empty"):
            IngestService.ingest_csv(csv_file(""), "y")

    def test_header_only(self, csv_file):
        with pytest.raises(DataError, match="no samples"):
            IngestService.ingest_csv(csv_file("x,y\n"), "y")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="does not exist"):
            IngestService.ingest_csv(tmp_path / "nope.csv", "y")

    def test_ragged_rows(self, csv_file):
        with pytest.raises(DataError):
            IngestService.ingest_csv(csv_file("x,y\n1,2,3\n"), "y")


class TestReadFeatures:
    def test_selects_model_columns_in_model_order(self, csv_file):
        X = IngestService.read_features(csv_file("b,y,a\n1,9,2\n3,9,4\n"), feature_names=["a", "b"])

        assert np.array_equal(X, [[2.0, 1.0], [4.0, 3.0]])

    def test_drops_the_target(self, csv_file):
        X = IngestService.read_features(csv_file("a,y\n1,9\n"), target_column="y")

        assert X.tolist() == [[1.0]]

    def test_missing_model_column(self, csv_file):
        with pytest.raises(DataError, match="missing"):
            IngestService.read_features(csv_file("a\n1\n"), feature_names=["a", "b"])

    def test_no_rows(self, csv_file):
        with pytest.raises(DataError, match="no data rows"):
            IngestService.read_features(csv_file("a,b\n"))
