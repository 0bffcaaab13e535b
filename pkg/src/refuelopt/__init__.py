"""Habit-aware one-stop refueling itinerary optimization."""

__version__ = "0.1.0"
