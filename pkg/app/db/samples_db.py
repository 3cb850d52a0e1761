import os
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from app.app_container import app_container
from app.business_logic.exceptions import IngestionError
from app.models.observation_models import IngestionReport, Sample
from app.models.run_models import ColumnSchema
from app.utils.logger import LoggerManager


class SamplesDB:
    """
    Repository for duration samples stored as CSV files.
    Reads and writes Sample objects and fetches the bundled dataset.
    """
    def __init__(self):
        self.config = app_container.config()
        self.logger = LoggerManager.get_logger('samples_db')

    @staticmethod
    def _to_float(cell: str) -> float:
        try:
            return float(cell)
        except ValueError:
            return np.nan

    @classmethod
    def _numeric_column(cls, frame: pd.DataFrame, column: str) -> np.ndarray:
        raw = frame[column]
        # float() parses the shortest repr back to the identical double
        values = raw.map(cls._to_float)
        bad = values.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
            raise IngestionError(f"non-numeric value {raw.iloc[row - 1]!r}", row=row, column=column)
        return values.to_numpy(dtype=float)

    def load_csv(self, path: str, schema: ColumnSchema) -> Tuple[Sample, IngestionReport]:
        """
        Load a duration CSV file into a Sample, rows in file order.

        Args:
            path: CSV file with a header row.
            schema: column mapping; continuous columns form the first p covariates.

        Returns:
            The sample and an ingestion report with censoring counts.
        """
        if not os.path.isfile(path):
            raise IngestionError(f"file not found: {path}")
        try:
            # read as text so that non-numeric cells can be reported precisely
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
        except pd.errors.EmptyDataError:
            raise IngestionError("no data rows")
        except Exception as e:
            self.logger.error(f"Failed to parse {path}: {str(e)}")
            raise IngestionError(f"could not parse CSV: {str(e)}") from e
        if frame.empty:
            raise IngestionError("no data rows")

        wanted = [schema.duration, schema.event] + schema.covariates
        if schema.group:
            wanted.append(schema.group)
        for column in wanted:
            if column not in frame.columns:
                raise IngestionError("missing column", column=column)
        if not schema.covariates:
            raise IngestionError("schema names no covariate columns")

        y0 = self._numeric_column(frame, schema.duration)
        bad = np.flatnonzero(~np.isfinite(y0) | (y0 <= 0))
        if bad.size:
            raise IngestionError(f"duration must be positive, got {y0[bad[0]]}", row=int(bad[0]) + 1, column=schema.duration)

        d = self._numeric_column(frame, schema.event)
        bad = np.flatnonzero((d != 0) & (d != 1))
        if bad.size:
            raise IngestionError(f"event indicator must be 0 or 1, got {d[bad[0]]:g}", row=int(bad[0]) + 1, column=schema.event)

        x = np.column_stack([self._numeric_column(frame, c) for c in schema.covariates])
        bad_rows, bad_cols = np.nonzero(~np.isfinite(x))
        if bad_rows.size:
            raise IngestionError("covariate must be finite", row=int(bad_rows[0]) + 1, column=schema.covariates[bad_cols[0]])

        p = len(schema.continuous)
        observed = sorted({tuple(row) for row in x[:, p:].tolist()})
        if schema.discrete_support is not None:
            support = [tuple(float(v) for v in b) for b in schema.discrete_support]
            undeclared = set(observed) - set(support)
            if undeclared:
                raise IngestionError(f"discrete tuples {sorted(undeclared)} are outside the declared support")
        else:
            support = observed

        sample = Sample(
            y0=y0,
            d=d.astype(np.int8),
            x=x,
            p=p,
            discrete_support=support,
            covariate_names=schema.covariates,
        )
        report = self._report(sample, frame[schema.group] if schema.group else None, schema.group)
        self.logger.info(
            f"Loaded {report.n} rows from {path}: {report.censored} censored "
            f"({100 * report.censor_rate:.0f}%), {report.uncensored} uncensored"
        )
        for group, rate in report.group_censor_rates.items():
            self.logger.info(f"Censoring rate for {schema.group}={group}: {100 * rate:.0f}%")
        return sample, report

    @staticmethod
    def _report(sample: Sample, groups: Optional[pd.Series], group_column: Optional[str]) -> IngestionReport:
        censored = int(np.sum(sample.d == 0))
        rates = {}
        if groups is not None:
            frame = pd.DataFrame({"group": groups.to_numpy(), "censored": sample.d == 0})
            rates = {str(k): float(v) for k, v in frame.groupby("group", sort=True)["censored"].mean().items()}
        return IngestionReport(
            n=sample.n,
            censored=censored,
            uncensored=sample.n - censored,
            censor_rate=sample.censor_rate,
            group_column=group_column,
            group_censor_rates=rates,
        )

    def save_csv(self, sample: Sample, path: str) -> ColumnSchema:
        """
        Write a Sample so that load_csv with the returned schema reproduces it bit for bit.
        """
        names: List[str] = sample.covariate_names or [f"x{i + 1}" for i in range(sample.k)]
        frame = pd.DataFrame({"y0": sample.y0, "d": sample.d.astype(int)})
        for i, name in enumerate(names):
            frame[name] = sample.x[:, i]
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        # repr formatting round-trips float64 exactly
        frame.to_csv(path, index=False, float_format=lambda v: repr(float(v)))
        self.logger.info(f"Wrote {sample.n} rows to {path}")
        return ColumnSchema(
            duration="y0",
            event="d",
            continuous=names[:sample.p],
            discrete=names[sample.p:],
            discrete_support=[list(b) for b in sample.discrete_support],
        )

    def fetch_stanford_heart(self, dest: Optional[str] = None, url: Optional[str] = None) -> str:
        """
        Download the Stanford heart transplant table and write the
        (time, death, transplant, age) fixture used by the empirical commands.
        Zero follow-up times are set to half a day.
        """
        dest = dest or os.path.join(self.config.DATA_DIR, self.config.STANFORD_FILE_NAME)
        url = url or self.config.STANFORD_SOURCE_URL
        self.logger.info(f"Fetching Stanford heart transplant data from {url}")
        try:
            raw = pd.read_csv(url)
        except Exception as e:
            self.logger.error(f"Failed to fetch {url}: {str(e)}")
            raise IngestionError(f"could not fetch {url}: {str(e)}") from e
        for column in ("futime", "fustat", "transplant", "age"):
            if column not in raw.columns:
                raise IngestionError("missing column in downloaded table", column=column)
        fixture = pd.DataFrame({
            "time": raw["futime"].astype(float).where(raw["futime"] > 0, 0.5),
            "death": raw["fustat"].astype(int),
            "transplant": raw["transplant"].astype(int),
            "age": raw["age"].astype(float),
        })
        os.makedirs(os.path.dirname(os.path.abspath(dest)), exist_ok=True)
        fixture.to_csv(dest, index=False)
        self.logger.info(f"Wrote {len(fixture)} rows to {dest}")
        return dest
