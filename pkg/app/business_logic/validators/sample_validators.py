from app.models.observation_models import Sample
from app.utils.logger import LoggerManager


class SampleValidators:
    def __init__(self):
        self.logger = LoggerManager.get_logger('sample_validators')

    def validate_size_for_variance(self, sample: Sample):
        if sample.n < 3:
            self.logger.warning(f"Sample has n={sample.n}; order-3 variance kernels need n >= 3")
            return False
        return True

    def validate_not_fully_censored(self, sample: Sample):
        if sample.n and sample.censor_rate == 1.0:
            self.logger.warning("Every observation is censored; the beta moments carry no information")
            return False
        return True

    def validate_covariate_variation(self, sample: Sample):
        distinct = {tuple(row) for row in sample.x.tolist()}
        if len(distinct) < 2:
            self.logger.warning("All observations share one covariate value; no pair is informative")
            return False
        return True

    def validate_sample(self, sample: Sample):
        self.logger.info(f"Validating sample of n={sample.n}...")
        is_large_enough = self.validate_size_for_variance(sample)
        is_not_fully_censored = self.validate_not_fully_censored(sample)
        has_variation = self.validate_covariate_variation(sample)
        result = is_large_enough and is_not_fully_censored and has_variation
        self.logger.info(f"Sample validation {'passed' if result else 'failed'}")
        return result
