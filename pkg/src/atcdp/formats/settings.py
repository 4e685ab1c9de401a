"""Job-settings JSON document controlling the pipeline's rejection gates."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass, fields, replace

from atcdp.errors import ValidationError

ENV_PREFIX = "ATCDP_"


@dataclass(frozen=True)
class JobSettings:
    max_audio_len: float = 120.0
    min_audio_len: float = 1.0
    # no threshold is published for "too noisy"; -5 dB is a conservative default
    min_snr: float = -5.0
    min_english_score: float = 0.5
    asr_language: str = "en"
    audio_format: str = "wav"

    def __post_init__(self):
        if not self.min_audio_len < self.max_audio_len:
            raise ValidationError(
                f"min_audio_len ({self.min_audio_len}) must be below max_audio_len ({self.max_audio_len})")
        if not 0.0 <= self.min_english_score <= 1.0:
            raise ValidationError(f"min_english_score {self.min_english_score} outside [0, 1]")
        if self.min_audio_len < 0:
            raise ValidationError("min_audio_len must be non-negative")

    def to_dict(self):
        return asdict(self)


_KEYS = {f.name: f.type for f in fields(JobSettings)}
_NUMERIC = {"max_audio_len", "min_audio_len", "min_snr", "min_english_score"}


def _coerce(key, value):
    if key in _NUMERIC:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ValidationError(f"{key} must be a number")
        try:
            return float(value)
        except ValueError:
            raise ValidationError(f"{key} must be a number, got {value!r}") from None
    if not isinstance(value, str):
        raise ValidationError(f"{key} must be a string")
    return value


def parse_job_settings(document: str | dict, strict: bool = True) -> JobSettings:
    """Build settings from a JSON document; absent keys keep their defaults.

    Unknown keys raise in strict mode and only warn otherwise.
    """
    data = json.loads(document) if isinstance(document, str) else dict(document)
    if not isinstance(data, dict):
        raise ValidationError("job settings must be a JSON object")
    values = {}
    for key, value in data.items():
        if key not in _KEYS:
            if strict:
                raise ValidationError(f"unknown job setting {key!r}")
            warnings.warn(f"ignoring unknown job setting {key!r}", stacklevel=2)
            continue
        values[key] = _coerce(key, value)
    return JobSettings(**values)


def apply_env_overrides(settings: JobSettings, environ=None) -> JobSettings:
    """Override fields from ``ATCDP_<FIELD>`` environment variables."""
    environ = os.environ if environ is None else environ
    values = {}
    for key in _KEYS:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            values[key] = _coerce(key, environ[env_key])
    return replace(settings, **values) if values else settings


def read_job_settings(path, strict=True) -> JobSettings:
    with open(path, encoding="utf-8") as f:
        return parse_job_settings(f.read(), strict=strict)
