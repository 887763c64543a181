"""Datatype classification and literal value parsing.

Maps XSD datatypes onto the four coarse classes the miner distinguishes
(numeric, temporal, textual, other) and converts lexical forms into the
real-valued samples that range learning operates on. Temporal values are
expressed as seconds since the Unix epoch.
"""

from __future__ import annotations

import enum
import re
from datetime import date

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"

RDF_TYPE = RDF + "type"
RDF_LANGSTRING = RDF + "langString"
XSD_STRING = XSD + "string"

NUMERIC_DATATYPES = frozenset(
    XSD + local
    for local in (
        "integer",
        "nonNegativeInteger",
        "nonPositiveInteger",
        "negativeInteger",
        "positiveInteger",
        "long",
        "int",
        "short",
        "byte",
        "unsignedLong",
        "unsignedInt",
        "unsignedShort",
        "unsignedByte",
        "decimal",
        "float",
        "double",
    )
)

TEMPORAL_DATATYPES = frozenset(
    XSD + local
    for local in ("date", "dateTime", "gYear", "gYearMonth", "gMonthDay", "time", "duration")
)

TEXTUAL_DATATYPES = frozenset({XSD_STRING, RDF_LANGSTRING})


class DatatypeClass(enum.Enum):
    NUMERIC = "numeric"
    TEMPORAL = "temporal"
    TEXTUAL = "textual"
    OTHER = "other"


def classify_datatype(datatype: str) -> DatatypeClass:
    """Classify a datatype IRI. Total: unknown IRIs fall into OTHER."""
    if datatype in NUMERIC_DATATYPES:
        return DatatypeClass.NUMERIC
    if datatype in TEMPORAL_DATATYPES:
        return DatatypeClass.TEMPORAL
    if datatype in TEXTUAL_DATATYPES:
        return DatatypeClass.TEXTUAL
    return DatatypeClass.OTHER


_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()

# Trailing timezone on xsd date/time lexical forms: 'Z' or +hh:mm / -hh:mm.
_TZ_RE = re.compile(r"(Z|[+-]\d{2}:\d{2})$")

_DATETIME_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d+))?$"
)
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_GYEAR_RE = re.compile(r"^(\d{4,})$")
_GYEARMONTH_RE = re.compile(r"^(\d{4,})-(\d{2})$")
_GMONTHDAY_RE = re.compile(r"^--(\d{2})-(\d{2})$")
_TIME_RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2})(?:\.(\d+))?$")
_DURATION_RE = re.compile(
    r"^(-)?P(?:(\d+)Y)?(?:(\d+)M)?(?:(\d+)D)?"
    r"(?:T(?:(\d+)H)?(?:(\d+)M)?(?:(\d+(?:\.\d+)?)S)?)?$"
)

# Gregorian mean lengths, used only for xsd:duration year/month components.
_DAYS_PER_YEAR = 365.2425
_SECONDS_PER_YEAR = _DAYS_PER_YEAR * 86400.0
_SECONDS_PER_MONTH = _SECONDS_PER_YEAR / 12.0

# gMonthDay has no year; anchor in a leap year so --02-29 stays valid.
_GMONTHDAY_YEAR = 1972


def _split_timezone(lexical: str) -> tuple[str, float]:
    """Strip a trailing timezone, returning (rest, offset seconds east of UTC)."""
    m = _TZ_RE.search(lexical)
    if m is None:
        return lexical, 0.0
    tz = m.group(1)
    rest = lexical[: m.start()]
    if tz == "Z":
        return rest, 0.0
    sign = 1.0 if tz[0] == "+" else -1.0
    hours, minutes = int(tz[1:3]), int(tz[4:6])
    return rest, sign * (hours * 3600 + minutes * 60)


def _day_seconds(year: int, month: int, day: int) -> float:
    return float((date(year, month, day).toordinal() - _EPOCH_ORDINAL) * 86400)


def to_unix_seconds(lexical: str, datatype: str) -> float:
    """Convert a temporal lexical form to seconds since 1970-01-01T00:00:00Z.

    gYear anchors at Jan 1, gYearMonth at the first of the month, and
    gMonthDay at its month/day in the (leap) reference year 1972. Durations
    become total seconds, with year/month components valued at the
    Gregorian mean. Raises ValueError for unparseable forms or years
    outside 1..9999.
    """
    lexical = lexical.strip()
    if datatype == XSD + "duration":
        m = _DURATION_RE.match(lexical)
        if m is None or lexical in ("P", "-P"):
            raise ValueError(f"malformed duration: {lexical!r}")
        neg, years, months, days, hours, minutes, seconds = m.groups()
        if all(g is None for g in (years, months, days, hours, minutes, seconds)):
            raise ValueError(f"malformed duration: {lexical!r}")
        total = (
            int(years or 0) * _SECONDS_PER_YEAR
            + int(months or 0) * _SECONDS_PER_MONTH
            + int(days or 0) * 86400.0
            + int(hours or 0) * 3600.0
            + int(minutes or 0) * 60.0
            + float(seconds or 0.0)
        )
        return -total if neg else total

    rest, offset = _split_timezone(lexical)
    try:
        if datatype == XSD + "dateTime":
            m = _DATETIME_RE.match(rest)
            if m is None:
                raise ValueError
            y, mo, d, h, mi, s, frac = m.groups()
            base = _day_seconds(int(y), int(mo), int(d))
            secs = int(h) * 3600 + int(mi) * 60 + int(s)
            fraction = float(f"0.{frac}") if frac else 0.0
            return base + secs + fraction - offset
        if datatype == XSD + "date":
            m = _DATE_RE.match(rest)
            if m is None:
                raise ValueError
            return _day_seconds(*(int(g) for g in m.groups())) - offset
        if datatype == XSD + "gYear":
            m = _GYEAR_RE.match(rest)
            if m is None:
                raise ValueError
            return _day_seconds(int(m.group(1)), 1, 1) - offset
        if datatype == XSD + "gYearMonth":
            m = _GYEARMONTH_RE.match(rest)
            if m is None:
                raise ValueError
            return _day_seconds(int(m.group(1)), int(m.group(2)), 1) - offset
        if datatype == XSD + "gMonthDay":
            m = _GMONTHDAY_RE.match(rest)
            if m is None:
                raise ValueError
            return _day_seconds(_GMONTHDAY_YEAR, int(m.group(1)), int(m.group(2))) - offset
        if datatype == XSD + "time":
            m = _TIME_RE.match(rest)
            if m is None:
                raise ValueError
            h, mi, s, frac = m.groups()
            fraction = float(f"0.{frac}") if frac else 0.0
            return int(h) * 3600 + int(mi) * 60 + int(s) + fraction - offset
    except ValueError:
        raise ValueError(f"malformed {datatype.rsplit('#', 1)[-1]} literal: {lexical!r}") from None
    raise ValueError(f"not a temporal datatype: {datatype}")


def literal_value(lexical: str, datatype: str) -> float:
    """Parse a numeric or temporal lexical form into a float sample.

    Raises ValueError for textual/other datatypes and malformed forms.
    """
    cls = classify_datatype(datatype)
    if cls is DatatypeClass.NUMERIC:
        return float(lexical)
    if cls is DatatypeClass.TEMPORAL:
        return to_unix_seconds(lexical, datatype)
    raise ValueError(f"no real-valued interpretation for datatype {datatype}")
