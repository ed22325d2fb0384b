"""Shipped experiment configs (TOML files next to this module)."""
