"""Training callback events."""

from __future__ import annotations

import logging
from enum import IntEnum
from typing import Any, Callable


class TrainingEvent(IntEnum):
    """Enum for training event types."""

    STEP_LOGGED = 0
    CHECKPOINT_SAVED = 1
    COLLAPSE_DETECTED = 2
    EPOCH_FINISHED = 3


_LOGGER = logging.getLogger("pycgn.events")

# Keyword arguments each event must carry, with their expected types.
EVENT_SYNTAX: dict[TrainingEvent, dict[str, Any]] = {
    TrainingEvent.STEP_LOGGED: {"step": int, "losses": dict},
    TrainingEvent.CHECKPOINT_SAVED: {"step": int, "path": str},
    TrainingEvent.COLLAPSE_DETECTED: {"step": int, "state": str},
    TrainingEvent.EPOCH_FINISHED: {"epoch": int, "metrics": dict},
}


def check_syntax(args: dict[str, Any], objs: list[str], expected_type: Any) -> bool:
    """Check if the object is of the expected type."""
    for obj in objs:
        if obj not in args:
            _LOGGER.debug("%s was not found in %s", obj, args)
            return False
        if not isinstance(args[obj], expected_type):
            _LOGGER.debug(
                "%s was of type %s and not as expected %s",
                obj,
                type(args[obj]),
                expected_type,
            )
            return False

    return True


class EventHandler:
    """Event handler for trainer notifications."""

    def __init__(self) -> None:
        """Initialize the event handler object."""
        self.__events: dict[TrainingEvent, Callable[..., None]] = {}

    def set_handler(self, event: TrainingEvent, func: Callable[..., None]) -> None:
        """Set handler for a TrainingEvent"""
        self.__events.update({event: func})

    def del_handler(self, event: TrainingEvent) -> None:
        """Remove a handler for a TrainingEvent."""
        self.__events.pop(event)

    def call(self, event: TrainingEvent, **kwargs) -> bool:
        """Call a handler if it was set."""
        if event not in self.__events:
            return False

        for name, expected_type in EVENT_SYNTAX[event].items():
            if not check_syntax(kwargs, [name], expected_type):
                _LOGGER.warning(
                    "requirements for attributes was not fulfilled, not sending event!"
                )
                return False

        self.__events[event](**{name: kwargs[name] for name in EVENT_SYNTAX[event]})
        return True
