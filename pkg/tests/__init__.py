"""Tests for Bernoulli Lab."""
