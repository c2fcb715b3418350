"""Unit test package for cone_nn."""
