"""Exception types shared across the toolkit.

Every error carries a machine-readable ``code`` plus optional structured
``detail`` so the HTTP layer and CLI can surface them without string parsing.
"""

from __future__ import annotations

from typing import Any


class CinemotionError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_json_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "detail": self.detail}


# --- DSL parse/validation errors -------------------------------------------

class DslError(CinemotionError, ValueError):
    code = "dsl_error"


class UnknownPrimitive(DslError):
    code = "unknown_primitive"


class UnknownModifierKey(DslError):
    code = "unknown_modifier_key"


class ValueNotAllowed(DslError):
    code = "value_not_allowed"


class ModifierNotApplicable(DslError):
    code = "modifier_not_applicable"


class TooManyTags(DslError):
    code = "too_many_tags"


class RoleViolation(DslError):
    code = "role_violation"


class DuplicateKey(DslError):
    code = "duplicate_key"


# --- geometry kernel errors --------------------------------------------------

class DomainError(CinemotionError, ValueError):
    code = "domain_error"


class DegenerateLookAt(CinemotionError, ValueError):
    code = "degenerate_look_at"


class GimbalWarning(UserWarning):
    """Pitch within tolerance of +/-90 deg; yaw and roll are merged."""


# --- compiler errors ----------------------------------------------------------

class MissingTarget(CinemotionError, ValueError):
    code = "missing_target"


class FrameOutOfRange(CinemotionError, IndexError):
    code = "frame_out_of_range"


# --- tagging / evaluation errors ---------------------------------------------

class EmptyRange(CinemotionError, ValueError):
    code = "empty_range"


class LengthMismatch(CinemotionError, ValueError):
    code = "length_mismatch"


# --- planner errors ------------------------------------------------------------

class PlanRejected(CinemotionError):
    code = "plan_rejected"


class BackendUnavailable(CinemotionError):
    code = "backend_unavailable"


class PlanTimeout(CinemotionError):
    code = "timeout"
