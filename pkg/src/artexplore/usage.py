"""Session event log validation and descriptive usage reports.

Events are append-only; reports are pure functions over the log, so they
are reproducible after a restart. Screen dwell times come from pairing
each screen_leave with the most recent unmatched screen_enter of the
same session and screen; unpaired or time-reversed leaves are ignored
and counted as warnings.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

SCREENS = ("Home", "Category", "Object", "Painting", "Favorites", "Canvas")

EVENT_KINDS = (
    "screen_enter",
    "screen_leave",
    "save_object",
    "unsave_object",
    "generate_image",
)


class EventError(ValueError):
    """Malformed session event."""


@dataclass(frozen=True)
class UsageReport:
    """Average dwell per screen, category visit counts, saves per session."""

    per_screen_avg_duration: dict[str, float]
    category_visits: dict[str, int]
    saves_per_session: dict
    warnings: int

    def to_dict(self) -> dict:
        return {
            "per_screen_avg_duration": dict(sorted(self.per_screen_avg_duration.items())),
            "category_visits": dict(sorted(self.category_visits.items())),
            "saves_per_session": self.saves_per_session,
            "warnings": self.warnings,
        }

    def format_text(self) -> str:
        lines = ["average time per screen (seconds):"]
        for screen, avg in sorted(
            self.per_screen_avg_duration.items(), key=lambda kv: -kv[1]
        ):
            lines.append(f"  {screen:<10} {avg:.1f}")
        lines.append("category visits:")
        for category, n in sorted(self.category_visits.items(), key=lambda kv: -kv[1]):
            lines.append(f"  {category:<14} {n}")
        s = self.saves_per_session
        lines.append(
            f"saves per session: mean {s['mean']:.1f}, median {s['median']:.1f}"
            f" over {s['sessions']} session(s)"
        )
        if self.warnings:
            lines.append(f"warnings (unpaired/ill-ordered events): {self.warnings}")
        return "\n".join(lines)


def validate_event(event: dict) -> dict:
    """Check one incoming event and return its normalized form.

    Raises:
        EventError: missing fields, unknown kind, unknown screen name,
            or a save event without an object id.
    """
    if not isinstance(event, dict):
        raise EventError("event must be an object")
    session_id = event.get("session_id")
    if not session_id or not isinstance(session_id, str):
        raise EventError("missing session_id")
    ts = event.get("ts")
    if not isinstance(ts, (int, float)) or isinstance(ts, bool):
        raise EventError("missing numeric ts")
    kind = event.get("kind")
    if kind not in EVENT_KINDS:
        raise EventError(f"unknown event kind: {kind!r}")
    payload = event.get("payload") or {}
    if not isinstance(payload, dict):
        raise EventError("payload must be an object")
    if kind in ("screen_enter", "screen_leave"):
        screen = payload.get("screen")
        if screen not in SCREENS:
            raise EventError(f"unknown screen: {screen!r}")
        category = payload.get("category")
        if category is not None and not isinstance(category, str):
            raise EventError("category must be a string")
    if kind in ("save_object", "unsave_object"):
        if not payload.get("object_id"):
            raise EventError(f"{kind} requires payload.object_id")
    return {"session_id": session_id, "ts": float(ts), "kind": kind, "payload": payload}


def compute_usage_report(events: list[dict]) -> UsageReport:
    """Aggregate an event log (in append order) into a UsageReport."""
    open_enters: dict[tuple[str, str], list[float]] = {}
    durations: dict[str, list[float]] = {}
    category_visits: dict[str, int] = {}
    saves: dict[str, int] = {}
    sessions: set[str] = set()
    warnings = 0

    for event in events:
        session_id = event["session_id"]
        sessions.add(session_id)
        kind = event["kind"]
        payload = event.get("payload") or {}
        if kind == "screen_enter":
            screen = payload["screen"]
            open_enters.setdefault((session_id, screen), []).append(event["ts"])
            category = payload.get("category")
            if screen == "Object" and category:
                category_visits[category] = category_visits.get(category, 0) + 1
        elif kind == "screen_leave":
            screen = payload["screen"]
            stack = open_enters.get((session_id, screen))
            if not stack:
                warnings += 1
                continue
            entered = stack.pop()
            dwell = event["ts"] - entered
            if dwell < 0:
                warnings += 1
                continue
            durations.setdefault(screen, []).append(dwell)
        elif kind == "save_object":
            saves[session_id] = saves.get(session_id, 0) + 1

    per_screen = {screen: sum(ds) / len(ds) for screen, ds in durations.items()}
    per_session_saves = [saves.get(s, 0) for s in sorted(sessions)]
    if per_session_saves:
        summary = {
            "sessions": len(per_session_saves),
            "total": sum(per_session_saves),
            "mean": sum(per_session_saves) / len(per_session_saves),
            "median": float(statistics.median(per_session_saves)),
            "min": min(per_session_saves),
            "max": max(per_session_saves),
        }
    else:
        summary = {"sessions": 0, "total": 0, "mean": 0.0, "median": 0.0, "min": 0, "max": 0}
    return UsageReport(
        per_screen_avg_duration=per_screen,
        category_visits=category_visits,
        saves_per_session=summary,
        warnings=warnings,
    )
