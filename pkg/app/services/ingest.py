"""
IngestService.
CSV input: a header row, numeric cells, UTF-8, LF or CRLF line endings.
"""
from pathlib import Path
from typing import Optional, Sequence
import logging

import numpy as np
import pandas as pd

from app.core.exceptions import DataError
from app.models.dataset import Dataset
from app.services.gam import GamService

logger = logging.getLogger(__name__)


def _read_frame(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Input file {path} does not exist")
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"Input file {path} is empty")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse {path}: {e}")

    header = [name.strip() for name in raw.iloc[0]]
    duplicates = sorted({name for name in header if header.count(name) > 1})
    if duplicates:
        raise DataError(f"Duplicate header names in {path}: {duplicates}")
    if any(name == "" for name in header):
        raise DataError(f"Empty header name in {path}")
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header
    return frame.apply(lambda column: column.str.strip())


def _to_numeric(frame: pd.DataFrame, path: Path) -> pd.DataFrame:
    numeric = frame.apply(pd.to_numeric, errors="coerce").astype(float)
    bad = np.argwhere(~np.isfinite(numeric.to_numpy()))
    if len(bad):
        row, col = (int(v) for v in bad[0])
        raise DataError(
            f"Non-numeric cell {frame.iat[row, col]!r} in {path} at line {row + 2}, "
            f"column {frame.columns[col]!r}"
        )
    return numeric


class IngestService:
    @staticmethod
    def ingest_csv(path: Path, target_column: str) -> Dataset:
        """Features are every non-target column, in header order."""
        frame = _read_frame(path)
        if target_column not in frame.columns:
            raise DataError(f"Target column {target_column!r} not found in {path}; columns: {list(frame.columns)}")
        numeric = _to_numeric(frame, path)
        feature_names = [name for name in numeric.columns if name != target_column]
        logger.info(f"Read {len(numeric)} rows x {len(feature_names)} features from {path}")
        return GamService.build_dataset(
            numeric[feature_names].to_numpy(),
            numeric[target_column].to_numpy(),
            feature_names=feature_names,
        )

    @staticmethod
    def read_features(
        path: Path,
        feature_names: Sequence[str] = (),
        target_column: Optional[str] = None,
    ) -> np.ndarray:
        """
        Feature matrix for prediction: the named columns when `feature_names`
        is given, otherwise every column except `target_column`.
        """
        frame = _read_frame(path)
        if feature_names:
            missing = [name for name in feature_names if name not in frame.columns]
            if missing:
                raise DataError(f"Columns {missing} required by the model are missing from {path}")
            frame = frame[list(feature_names)]
        elif target_column is not None and target_column in frame.columns:
            frame = frame.drop(columns=[target_column])
        if len(frame) == 0:
            raise DataError(f"Input file {path} has no data rows")
        return _to_numeric(frame, path).to_numpy()
