"""Reference benchmark rows used to check the metric formulas.

Each row is (pipeline, variant, t_avg_ms, fps, mb_per_s, joules_per_run,
peak_mem_gb); accelerator rows without energy or memory figures carry None.
All rows share the same input size per call.
"""

REFERENCE_INPUT_BYTES = 5_472_000

GPU_ROWS = (
    ("RF2IQ_DAS_DOPPLER", "Dynamic indexing", 0.787, 1270.6, 6953.87, 0.047, 0.337),
    ("RF2IQ_DAS_POWERDOPPLER", "Dynamic indexing", 0.754, 1326.2, 7256.36, 0.043, 0.669),
    ("RF2IQ_DAS_BMODE", "Dynamic indexing", 11.835, 84.5, 462.38, 3.108, 1.001),
    ("RF2IQ_DAS_DOPPLER", "Full CNN", 8.852, 113.0, 618.20, 2.162, 0.359),
    ("RF2IQ_DAS_POWERDOPPLER", "Full CNN", 8.949, 111.7, 611.49, 2.152, 2.391),
    ("RF2IQ_DAS_BMODE", "Full CNN", 19.287, 51.8, 283.72, 5.779, 2.745),
    ("RF2IQ_DAS_DOPPLER", "Sparse matrices", 19.213, 52.0, 284.83, 4.857, 0.171),
    ("RF2IQ_DAS_POWERDOPPLER", "Sparse matrices", 19.215, 52.0, 284.79, 4.864, 5.950),
    ("RF2IQ_DAS_BMODE", "Sparse matrices", 29.574, 33.8, 185.04, 8.321, 6.116),
)

# t_avg here is printed in seconds in the source table; converted to ms
TPU_ROWS = (
    ("RF2IQ_DAS_DOPPLER", "Dynamic indexing", 181.0, 5.53, 30.27, None, None),
    ("RF2IQ_DAS_POWERDOPPLER", "Dynamic indexing", 182.0, 5.48, 30.00, None, None),
    ("RF2IQ_DAS_BMODE", "Dynamic indexing", 184.0, 5.43, 29.70, None, None),
    ("RF2IQ_DAS_DOPPLER", "Full CNN", 10.0, 96.4, 527.72, None, None),
    ("RF2IQ_DAS_POWERDOPPLER", "Full CNN", 9.0, 103.9, 568.39, None, None),
    ("RF2IQ_DAS_BMODE", "Full CNN", 12.0, 83.3, 455.72, None, None),
)
