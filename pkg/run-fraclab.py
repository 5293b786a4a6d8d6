"""
Run a laboratory command, e.g.

    python run-fraclab.py suite --config data/experiments/radial_a0.yml
"""

from fraclab.cli import main


if __name__ == "__main__":
    main()  # pylint: disable=no-value-for-parameter
