# Iterative reconstruction from time encodings
