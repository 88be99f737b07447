# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Property graph schema evolution package."""
