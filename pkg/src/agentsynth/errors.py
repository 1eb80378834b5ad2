"""Exception hierarchy shared across the toolkit.

Three top-level families map onto the CLI exit codes: configuration
problems (2), data problems (3), and numerical divergence during model
fitting (4). Everything derives from :class:`AgentSynthError` so callers
can catch toolkit errors without swallowing genuine bugs.
"""


class AgentSynthError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AgentSynthError):
    """Invalid experiment configuration or generator specification."""


class DataError(AgentSynthError):
    """Bad input data: out-of-range values, unknown categories, missing
    cells, empty pools, degenerate columns, incomparable distributions."""


class SchemaError(DataError):
    """Schema declaration is inconsistent, or data does not match the schema
    (wrong width, wrong column names, unresolved bins)."""


class DivergenceError(AgentSynthError):
    """A model fit produced non-finite values (loss or gradients)."""


class StaleCacheError(AgentSynthError):
    """A backward pass was given a cache that does not match the network."""


class UnreachableContextError(DataError):
    """A Gibbs chain reached a context with no estimated conditional."""


class ExactSearchLimitError(ConfigError):
    """Exact structure search was requested above its variable cap; use
    greedy_search instead."""
