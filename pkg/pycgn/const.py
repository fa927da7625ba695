"""Constants used by pycgn."""

from __future__ import annotations

# Dataset variants
COLORED = "colored"
DOUBLE_COLORED = "double_colored"
WILDLIFE = "wildlife"

VARIANTS = (COLORED, DOUBLE_COLORED, WILDLIFE)

TRAIN = "train"
TEST = "test"

NUM_CLASSES = 10

# Images of every variant are 32x32 so that a full texture patch fills a region
# and the generators can upsample 2 -> 32 in four stages.
IMAGE_SIZE = 32
MNIST_SIZE = 28
BINARIZE_THRESHOLD = 0.5

# Real training data size used by the classifier experiments.
MNIST_TRAIN_SIZE = 50000
MNIST_TEST_SIZE = 10000

DEFAULT_SIGMA = 0.02

# Texture bank
TEXTURE_SIZE = 64
TEXTURES_PER_ROLE = 10
FG_TEXTURE_CLASS = "striped"
BG_TEXTURE_CLASS = "veiny"
DTD = "dtd"
PROCEDURAL = "procedural"
DTD_URL = "https://www.robots.ox.ac.uk/~vgg/data/dtd/download/dtd-r1.0.1.tar.gz"
TEXTURE_EXTENSIONS = (".jpg", ".jpeg", ".png")

# Environment sets
ENV_RHOS_2 = (0.9, 1.0)
ENV_RHOS_5 = (0.9, 0.925, 0.95, 0.975, 1.0)
CAUSAL_ID_RHOS = (0.9, 0.95, 1.0)

# Structural causal model
NOISE_DIM = 32
EMBEDDING_DIM = 32
SHUFFLE_PATCH = 4
TRIPLE_SPACE = NUM_CLASSES**3
MAX_CF_RATIO = {
    COLORED: NUM_CLASSES,
    DOUBLE_COLORED: TRIPLE_SPACE,
    WILDLIFE: TRIPLE_SPACE,
}

# Losses
DEFAULT_TAU = 0.1
LOG_EPS = 1e-7
COLLAPSE_WINDOW = 200
COLLAPSE_PATIENCE = 3

ADVERSARIAL = "adversarial"
RECONSTRUCTION = "reconstruction"
MODES = (ADVERSARIAL, RECONSTRUCTION)

# Trainer defaults
BATCH_SIZE = 64
CGN_STEPS = 30000
LR_SHAPE = 1e-4
LR_TEXTURE = 2e-4
LR_DISCRIMINATOR = 2e-4
ADAM_BETAS = (0.5, 0.999)
LOG_EVERY = 100
CHECKPOINT_EVERY = 5000

# Classifier defaults
CLF_EPOCHS = 5
CLF_LR = 1e-3
CLF_BATCH_SIZE = 128
BACKBONE_CHANNELS = (32, 64, 128)
FEATURE_DIM = 128
IRM_LAMBDA_MAX = 1e4
IRM_RAMP_FRACTION = 0.5
DEFAULT_CF_COUNT = 100000
DEFAULT_CF_RATIO = 10

HEAD_SHAPE = "shape"
HEAD_FG = "fg_factor"
HEAD_BG = "bg_factor"
HEAD_ROLES = (HEAD_SHAPE, HEAD_FG, HEAD_BG)

# Run bookkeeping
DATA_ROOT_ENV = "PYCGN_DATA_ROOT"
DEFAULT_DATA_ROOT = "./data"
MANIFEST_NAME = "manifest.json"

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_USAGE = 2
EXIT_COLLAPSE = 3
EXIT_NUMERIC = 4
EXIT_FETCH_REQUIRED = 5
EXIT_CHECKS_FAILED = 6
