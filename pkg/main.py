"""
MORL — Mixed On-policy Reinforcement Learning toolkit
Entry point and CLI launcher.

    python main.py score --in reqs.jsonl --out rewards.jsonl
    python main.py --debug train-toy --config configs/counting_toy.json --log train.jsonl
"""

import logging
import sys

from interfaces.cli_interface import dispatch

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger("MORL")


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
