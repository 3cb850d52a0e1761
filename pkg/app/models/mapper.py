from typing import Dict, List

import numpy as np
import pandas as pd

from app.business_logic.exceptions import MapperError
from app.models.confset_models import ConfidenceSet
from app.models.population_models import BoundResult
from app.models.test_models import TestOutcome

UNBOUNDED = "inf"


class ResultMapper:
    """
    Maps result models to JSON payload dicts and to flat DataFrames for plotting.
    DataFrames never hold infinities; unboundedness goes to *_flag columns.
    """
    @staticmethod
    def outcome_to_payload(outcome: TestOutcome) -> dict:
        try:
            return outcome.summary()
        except Exception as e:
            raise MapperError(f"Failed to map test outcome: {str(e)}") from e

    @staticmethod
    def intervals_to_frame(projections: Dict[str, List[dict]]) -> pd.DataFrame:
        try:
            rows = []
            for coordinate, intervals in projections.items():
                for piece, interval in enumerate(intervals):
                    rows.append({
                        "coordinate": coordinate,
                        "piece": piece,
                        "low": np.nan if interval["empty"] else interval["low"],
                        "high": np.nan if interval["empty"] else interval["high"],
                        "low_flag": UNBOUNDED if interval["unbounded_below"] else "",
                        "high_flag": UNBOUNDED if interval["unbounded_above"] else "",
                        "empty": interval["empty"],
                    })
            return pd.DataFrame(rows, columns=["coordinate", "piece", "low", "high", "low_flag", "high_flag", "empty"])
        except Exception as e:
            raise MapperError(f"Failed to map intervals: {str(e)}") from e

    @staticmethod
    def confidence_set_to_payload(cs: ConfidenceSet) -> dict:
        try:
            return {
                "coordinate_names": cs.coordinate_names,
                "grid_points": int(cs.points.shape[0]),
                "accepted_count": int(cs.accepted.sum()),
                "empty": cs.is_empty,
                "edges": [None if edge is None else list(edge) for edge in cs.edges],
                "projections": cs.projections,
                "accepted_points": cs.accepted_points.tolist(),
            }
        except Exception as e:
            raise MapperError(f"Failed to map confidence set: {str(e)}") from e

    @staticmethod
    def confidence_set_to_frame(cs: ConfidenceSet) -> pd.DataFrame:
        try:
            frame = pd.DataFrame(cs.points, columns=cs.coordinate_names)
            frame["statistic"] = [o.statistic for o in cs.outcomes]
            # skipped simulations (zero statistic) have no critical value
            frame["critical_value"] = [np.nan if o.critical_value is None else o.critical_value for o in cs.outcomes]
            frame["accepted"] = cs.accepted.astype(int)
            return frame
        except Exception as e:
            raise MapperError(f"Failed to map confidence set points: {str(e)}") from e

    @staticmethod
    def bound_to_payload(bound: BoundResult) -> dict:
        try:
            payload = {
                "grid_points": int(bound.beta_points.shape[0]),
                "members": int(bound.member.sum()),
                "tolerance": bound.tolerance,
                "uninformative": bound.uninformative,
                "intervals": bound.intervals,
            }
            if bound.envelope:
                payload["y_tilde"] = bound.y_tilde
                payload["envelope"] = [point.model_dump(mode="json") for point in bound.envelope]
            return payload
        except Exception as e:
            raise MapperError(f"Failed to map bound result: {str(e)}") from e

    @staticmethod
    def membership_to_frame(bound: BoundResult, names: List[str]) -> pd.DataFrame:
        try:
            frame = pd.DataFrame(bound.beta_points, columns=names)
            frame["member"] = bound.member.astype(int)
            return frame
        except Exception as e:
            raise MapperError(f"Failed to map membership grid: {str(e)}") from e

    @staticmethod
    def envelope_to_frame(bound: BoundResult) -> pd.DataFrame:
        try:
            rows = [{
                "y": point.y,
                "lower": np.nan if point.lower is None else point.lower,
                "threshold": np.nan if point.threshold is None else point.threshold,
                "true_value": point.true_value,
                "status": point.status.value,
                "lower_flag": UNBOUNDED if point.status.value == "unbounded_below" else "",
            } for point in bound.envelope]
            return pd.DataFrame(rows, columns=["y", "lower", "threshold", "true_value", "status", "lower_flag"])
        except Exception as e:
            raise MapperError(f"Failed to map envelope: {str(e)}") from e

    @staticmethod
    def joint_bands_to_frame(cs: ConfidenceSet, y_grid: List[float]) -> pd.DataFrame:
        """Marginal T(y) bands of a joint set, one row per y."""
        try:
            rows = []
            for y in y_grid:
                interval = cs.projections[f"T({y:g})"][0]
                rows.append({
                    "y": y,
                    "lower": np.nan if interval["empty"] else interval["low"],
                    "upper": np.nan if interval["empty"] else interval["high"],
                    "lower_flag": UNBOUNDED if interval["unbounded_below"] else "",
                    "upper_flag": UNBOUNDED if interval["unbounded_above"] else "",
                    "empty": interval["empty"],
                })
            return pd.DataFrame(rows, columns=["y", "lower", "upper", "lower_flag", "upper_flag", "empty"])
        except Exception as e:
            raise MapperError(f"Failed to map joint bands: {str(e)}") from e
