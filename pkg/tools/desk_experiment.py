#!/usr/bin/env python3
"""Run the synthetic desk experiment and print the per-system metrics table.

Builds a small corpus whose concepts are written with interchangeable
synonyms, indexes it, and evaluates every system on verbatim and
synonym-reformulated queries.

USAGE:
    ./venv/bin/python tools/desk_experiment.py
    ./venv/bin/python tools/desk_experiment.py --documents 200 --seed 3
    ./venv/bin/python tools/desk_experiment.py --save /tmp/desk   # keep the inputs

The saved directory can be fed back to the cluster-search command line.
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from cluster_search.experiment import (  # noqa: E402
    ExperimentConfig,
    generate,
    run_experiment,
    save_experiment,
)


def main() -> int:
    parser = argparse.ArgumentParser(description="Synthetic retrieval experiment")
    parser.add_argument("--documents", type=int, default=50, help="Number of documents")
    parser.add_argument("--epsilon", type=float, default=0.2, help="Clustering threshold")
    parser.add_argument("--seed", type=int, default=13, help="Generator seed")
    parser.add_argument(
        "--curves", type=int, default=10, metavar="K", help="Print P/R at k = 1..K (0: off)"
    )
    parser.add_argument("--save", type=Path, help="Write the generated inputs here")
    parser.add_argument("-v", "--verbose", action="store_true", help="Show progress logs")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )

    config = ExperimentConfig(
        n_documents=args.documents,
        n_entities=max(1, args.documents // 5),
        epsilon=args.epsilon,
        curve_depth=args.curves,
        seed=args.seed,
    )
    data = generate(config)
    if args.save:
        print(f"Inputs written to {save_experiment(data, args.save)}")
    result = run_experiment(config, data)
    print(result.format_table())
    if args.curves:
        print()
        print(result.format_curves())
    return 0


if __name__ == "__main__":
    sys.exit(main())
