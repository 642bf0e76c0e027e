from __future__ import annotations

HSRW_MAGIC = b"HSRW"
HSRW_VERSION = 1
HSRW_HEADER_SIZE = 32

CHECKPOINT_MAGIC = b"HSNN"
CHECKPOINT_VERSION = 1

BIAS_MANIFEST_NAME = "manifest.json"

# Shutter speeds the device was recorded at, in seconds.
SHUTTER_SPEEDS = (1 / 100, 1 / 500, 1 / 1000, 1 / 5000, 1 / 10000)

EXPECTED_MANIFEST_KEYS = {
    "device",
    "notes",
    "frames",
}

EXPECTED_RECONSTRUCTION_SIDECAR_KEYS = {
    "source_id",
    "gamma",
    "g_red",
    "g_blue",
    "digital_gain",
    "seed",
}

EXPECTED_SYNTHESIS_SIDECAR_KEYS = {
    "ratio_R",
    "K",
    "bias_frame_id",
    "seed",
}

EXPECTED_RUN_LOG_COLUMNS = {
    "step",
    "lr",
    "loss",
    "val_psnr",
}

EXPECTED_CHECKPOINT_ARCH_KEYS = {
    "kind",
    "in_channels",
    "out_channels",
    "widths",
    "residual",
}
