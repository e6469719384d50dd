# Convergence checks and encoding profiles
