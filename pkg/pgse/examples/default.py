# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Default example module."""
from pgse.examples.merge import get_graphs  # noqa: F401
