"""Cross-domain aspect-based sentiment analysis toolkit."""

from absa._core import *  # noqa: F401,F403
