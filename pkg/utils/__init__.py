# Helpers for FiberLink: units, presets and reporting
