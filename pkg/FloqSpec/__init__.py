"""Floquet data, bands and resolvents of periodic canonical systems with measure coefficients."""
