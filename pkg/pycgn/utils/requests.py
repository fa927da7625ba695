"""For handling HTTP/HTTPS downloads."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from time import sleep

import requests

from ..exceptions import (
    APIError,
    InternalServerError,
    NoConnectionError,
    NotFoundError,
    RequestError,
    ServiceUnavailableError,
    TooManyRequestsError,
)

_LOGGER = logging.getLogger(__name__)

NUM_RETRIES = 5
MAX_BACKOFF = 120
BACKOFF_FACTOR = 3
CHUNK_SIZE = 1 << 20


def backoff(retry: int) -> float:
    """Calculate backoff time."""
    val: float = BACKOFF_FACTOR * (2 ** (retry - 1))

    return val if val <= MAX_BACKOFF else MAX_BACKOFF


def _raise_for_code(err: requests.exceptions.HTTPError) -> None:
    """Map an HTTP error to a pycgn exception; return for retryable codes."""
    code = err.response.status_code
    if code == 400:
        raise RequestError()
    elif code == 404:
        raise NotFoundError()
    elif code == 429:
        raise TooManyRequestsError()
    elif code == 500:
        raise InternalServerError()
    elif code == 503:
        raise ServiceUnavailableError()
    elif code == 504:
        return
    else:
        raise APIError(err)


def download(url: str, dest: str | Path) -> Path:
    """Stream url into dest, retrying gateway timeouts and dropped connections.

    Args:
        url (str): Source URL.
        dest (str | Path): Target file; written to a temp name first.

    Returns:
        Path: The written file.

    Raises:
        NoConnectionError: All retries were exhausted.
    """
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    tmp = dest.with_suffix(dest.suffix + ".part")

    for retry in range(NUM_RETRIES):
        try:
            with requests.get(url, stream=True, timeout=60) as req:
                req.raise_for_status()
                with open(tmp, "wb") as handle:
                    for chunk in req.iter_content(chunk_size=CHUNK_SIZE):
                        handle.write(chunk)
            os.replace(tmp, dest)
            _LOGGER.info("Downloaded %s to %s", url, dest)
            return dest
        except requests.exceptions.HTTPError as err:
            _raise_for_code(err)
        except requests.exceptions.ConnectionError:
            _LOGGER.debug("Connection to %s failed (attempt %s)", url, retry + 1)

        sleep(backoff(retry))

    raise NoConnectionError(f"Could not download {url}")
