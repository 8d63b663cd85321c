"""Unit tests per module"""

