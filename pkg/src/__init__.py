# vbt-tem: adaptive non-uniform sampling with variable-bias variable-threshold time encoding
