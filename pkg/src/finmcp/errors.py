"""Exception hierarchy shared by the provider, tool and protocol layers."""

from __future__ import annotations


class FinMcpError(Exception):
    """Base class for every error raised by this package."""


# provider layer


class ProviderError(FinMcpError):
    pass


class NotFound(ProviderError):
    pass


class AuthFailure(ProviderError):
    pass


class RateLimited(ProviderError):
    pass


class DecodeError(ProviderError):
    pass


class ProviderFailure(ProviderError):
    """Network errors and retryable statuses that outlived the retry budget."""


# tool layer


class ToolError(FinMcpError):
    pass


class UnknownCompany(ToolError):
    pass


class PeriodUnavailable(ToolError):
    pass


class InvalidDateRange(ToolError):
    pass


class ArgumentValidation(ToolError):
    pass


class UnknownTool(ToolError):
    pass


# dataset layer


class DatasetError(FinMcpError):
    pass


class MissingColumn(DatasetError):
    pass


class DuplicateId(DatasetError):
    pass


class EmptyLexicon(DatasetError):
    pass


# evaluation and reporting


class JoinMismatch(FinMcpError):
    pass


class UnwritableOutput(FinMcpError):
    pass


# model and judge endpoints


class ModelEndpointFailure(FinMcpError):
    pass


class JudgeEndpointFailure(FinMcpError):
    pass


class ConfigError(FinMcpError, ValueError):
    pass
