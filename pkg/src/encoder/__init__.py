# Integrate-and-fire time encoders
