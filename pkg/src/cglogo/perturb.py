"""Structure-breaking randomization controls.

Two perturbations probe whether an answer source relies on structure
rather than token statistics:

- shuffle_categories repartitions the 12 support images into new 6/6
  positive/negative sets, uniformly over the C(12,6) = 924 partitions,
  leaving the query and its gold label untouched.
- shuffle_query_sequence permutes the action order inside each shape of
  the query, leaving both support sets and the gold label untouched.

Both derive a per-problem RNG from (seed, problem id, operation), so a
perturbed problem depends only on the problem and the seed, never on
execution order.
"""

from __future__ import annotations

import random
from dataclasses import replace

from .dataset import BongardProblem, stable_seed
from .grammar import BongardImage, OneStrokeShape


def shuffle_categories(problem: BongardProblem, seed: int) -> BongardProblem:
    """Reassign the 12 support images to fresh 6/6 positive/negative sets."""
    rng = random.Random(stable_seed(seed, problem.id, "shuffle-categories"))
    pool = list(problem.positives) + list(problem.negatives)
    chosen = sorted(rng.sample(range(len(pool)), len(problem.positives)))
    chosen_set = set(chosen)
    positives = tuple(pool[i] for i in chosen)
    negatives = tuple(pool[i] for i in range(len(pool)) if i not in chosen_set)
    return replace(problem, positives=positives, negatives=negatives)


def shuffle_query_sequence(problem: BongardProblem, seed: int) -> BongardProblem:
    """Permute the drawing actions of the query, within each shape."""
    rng = random.Random(stable_seed(seed, problem.id, "shuffle-sequence"))
    shapes = []
    for shape in problem.query.shapes:
        actions = list(shape.actions)
        rng.shuffle(actions)
        shapes.append(OneStrokeShape(tuple(actions)))
    return replace(problem, query=BongardImage(tuple(shapes)))
