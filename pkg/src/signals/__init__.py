# Bandlimited signal models, generators and ingestion
