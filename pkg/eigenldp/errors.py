"""Exception types shared by the toolkit."""

from __future__ import annotations


class LdpError(Exception):
    """Base class for every error raised by eigenldp."""


class DomainError(LdpError, ValueError):
    """An argument falls outside the domain an operation accepts."""


class ConvergenceError(LdpError, RuntimeError):
    """A root finder, optimizer or Newton loop failed to converge."""
