"""Covert channels in robot behavior signals."""

from .core import (
    BitFrame,
    MorseSequence,
    Symbol,
    add_salt,
    frame_message,
    morse_to_text,
    text_to_morse,
    unframe_message,
)

__version__ = "0.1.0"

__all__ = [
    "BitFrame",
    "MorseSequence",
    "Symbol",
    "add_salt",
    "frame_message",
    "morse_to_text",
    "text_to_morse",
    "unframe_message",
]
