# Experiment presets and report emission
