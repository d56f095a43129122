"""Exception types shared across the package."""


class ArtimeshError(Exception):
    """Base class for every error raised by artimesh."""


class AssetError(ArtimeshError):
    """Unreadable or inconsistent mesh / label / URDF input."""


class GeometryError(ArtimeshError):
    """A geometric computation hit a degenerate configuration."""


class RenderError(ArtimeshError):
    """A rendering or prompt-image step could not produce a usable image."""


class PromptError(ArtimeshError):
    """A prompt template could not be filled."""


class ParseError(ArtimeshError):
    """An oracle reply did not match the expected block grammar."""


class OracleError(ArtimeshError):
    """Transport or backend failure while querying the oracle."""


class AuthenticationError(OracleError):
    """The remote endpoint rejected the credential."""


class KinematicsError(ArtimeshError):
    """Invalid articulation tree or joint state."""


class ConfigError(ArtimeshError):
    """Invalid run configuration."""
