import logging
from datetime import datetime
from typing import Optional

import pytz

ISO_FORMAT = "%Y-%m-%dT%H:%M:%S.000Z"

logger = logging.getLogger(__name__)


def as_utc(value: datetime) -> datetime:
    """Naive datetimes are taken to be UTC already."""
    if value.tzinfo is None:
        return pytz.utc.localize(value)
    return value.astimezone(pytz.utc)


def utc_now() -> datetime:
    return datetime.now(pytz.utc)


def datetime_to_iso(value: Optional[datetime] = None) -> str:
    """
    Artifact timestamp, e.g. '2024-03-15T06:30:00.000Z'.

    :param value: Datetime, naive or aware; defaults to now.
    :return: ISO 8601 string in UTC with the milliseconds zeroed.
    :raises ValueError: If value is not a datetime.
    """
    if value is None:
        value = utc_now()
    if not isinstance(value, datetime):
        raise ValueError(f"Expected a datetime, got {type(value).__name__}")
    if value.tzinfo is None:
        logger.debug("Naive datetime, assuming UTC")
    return as_utc(value).strftime(ISO_FORMAT)


def elapsed_seconds(started: datetime, finished: Optional[datetime] = None) -> float:
    return ((finished or utc_now()) - as_utc(started)).total_seconds()
