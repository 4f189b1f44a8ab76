from typing import Optional, Protocol, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from widthtools.control.extension import SearchContext
    from widthtools.performance.budget import Budget
    from widthtools.planners.tree import SearchStats, TreeNode


class Planner(Protocol):
    """Grows a lookahead tree below root within a budget"""

    def plan(
            self,
            ctx: 'SearchContext',
            root: 'TreeNode',
            budget: 'Budget',
            rng: np.random.Generator,
    ) -> 'SearchStats':
        ...

    def next_root(self, executed: Optional['TreeNode'], root: 'TreeNode') -> 'TreeNode':
        """Root of the next decision after executed was carried out.

        Args:
            executed: the executed child of the current root, if it was generated
            root: a fresh root node for the new decision point

        Returns:
            The node to plan from next; either root or a re-rooted retained subtree
        """
        ...
