"""Write a small synthetic dataset under ./data/synthetic.

Same as ``hsn simulate --out data/synthetic``.
"""

from hsn.data.synthetic import write_synthetic_dataset

OUT_DIR = "data/synthetic"
N_SCENES = 16
SIZE = 128
SEED = 0

if __name__ == "__main__":
    write_synthetic_dataset(OUT_DIR, n_scenes=N_SCENES, size=SIZE, seed=SEED)
