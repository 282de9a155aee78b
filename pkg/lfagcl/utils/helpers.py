import hashlib
import json
import logging
from typing import Any, Mapping


def format_number(value: float) -> str:
    """Render a number with 6 significant digits."""
    return f"{value:.6g}"


def canonical_json(data: Mapping[str, Any]) -> str:
    """JSON with sorted keys and no whitespace, stable across runs."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: Mapping[str, Any]) -> bytes:
    """SHA-256 digest of a config dump."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).digest()


def setup_logging(verbose: bool = False) -> None:
    """Configure the root logger once for a CLI process."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
