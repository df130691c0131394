"""Wrap run report and its CSV export."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


@dataclass
class WrapReport:
    """Outcome of one optimize_normals run.

    Attributes:
        loss_trace: Mean per-pixel alignment loss of each iteration's views
        errors: Per-Gaussian blend-weighted error after the last iteration
        clones_added: Iteration -> number of clones appended there
    """

    loss_trace: List[float] = field(default_factory=list)
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    clones_added: Dict[int, int] = field(default_factory=dict)

    @property
    def total_clones(self) -> int:
        return int(sum(self.clones_added.values()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "iteration": np.arange(len(self.loss_trace), dtype=int),
                "loss": np.asarray(self.loss_trace, dtype=float),
                "clones_added": [self.clones_added.get(i, 0) for i in range(len(self.loss_trace))],
            }
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)
        logger.info(f"Wrote wrap report with {len(self.loss_trace)} iterations to {path}")
