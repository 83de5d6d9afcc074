import os

from typeguard.importhook import install_import_hook

if not os.environ.get("SADDLEPREC_SLOW_TESTS"):
    install_import_hook(["saddleprec"])
