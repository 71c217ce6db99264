"""Grid-based integer programming for joint floorplan and furniture layout."""

from __future__ import annotations

__version__ = "0.1.0"
