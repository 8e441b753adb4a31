import re
from dataclasses import dataclass

SCHEMA_NAME = "mongeforge"
SUPPORTED_MAJORS = (1,)


@dataclass(frozen=True)
class SchemaVersion:
    """Scene document schema version, written as ``mongeforge/<major>[.<minor>]``."""

    name: str
    major: int
    minor: int = 0

    def __str__(self) -> str:
        """Convert version to string."""
        if self.minor:
            return f"{self.name}/{self.major}.{self.minor}"
        return f"{self.name}/{self.major}"

    @classmethod
    def parse(cls, version_string: str) -> "SchemaVersion":
        """Parse a version string into a SchemaVersion object."""
        pattern = r"""
            ^
            (?P<name>[a-z][a-z0-9_-]*)
            /
            (?P<major>0|[1-9]\d*)
            (?:\.(?P<minor>0|[1-9]\d*))?
            $
        """
        match = re.match(pattern, version_string.strip(), re.VERBOSE)
        if not match:
            raise ValueError(f"Invalid schema version string: {version_string!r}")

        return cls(
            name=match.group("name"),
            major=int(match.group("major")),
            minor=int(match.group("minor") or 0),
        )

    def is_supported(self) -> bool:
        """Documents of a known major are readable; minors only add optional fields."""
        return self.name == SCHEMA_NAME and self.major in SUPPORTED_MAJORS

    def __lt__(self, other: "SchemaVersion") -> bool:
        if not isinstance(other, SchemaVersion):
            return NotImplemented
        return (self.name, self.major, self.minor) < (other.name, other.major, other.minor)


CURRENT_SCHEMA = SchemaVersion(SCHEMA_NAME, 1)


def check_schema(version_string: str) -> SchemaVersion:
    """Parse and validate a document version, raising ValueError when unsupported."""
    version = SchemaVersion.parse(version_string)
    if not version.is_supported():
        raise ValueError(
            f"Unsupported schema {version}; this build reads {CURRENT_SCHEMA}"
        )
    return version
