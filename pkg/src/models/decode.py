from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.schemas.solver import DecodeStats, DecodeStatus


@dataclass
class DecodeResult:
    status: DecodeStatus
    Xhat: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    stats: DecodeStats = field(default_factory=DecodeStats)
    message: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.status == "success"
