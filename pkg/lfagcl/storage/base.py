"""
Base Binary Codec
=================
Generic encode/decode of one artifact type to a little-endian binary file.

Every file starts with 8 magic bytes and a u32 format version. Subclasses
write their body with `BinaryWriter` and read it back with `BinaryReader`,
naming each section so a truncated or corrupt file reports where it broke.
"""

import logging
import struct
from pathlib import Path
from typing import Any, Generic, TypeVar

import numpy as np

from lfagcl.core.exceptions import CheckpointFormatError, CheckpointVersionError, DatasetIOError

logger = logging.getLogger(__name__)

ArtifactType = TypeVar("ArtifactType")


class BinaryWriter:
    def __init__(self):
        self._chunks: list[bytes] = []

    def u32(self, value: int) -> None:
        self._chunks.append(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._chunks.append(struct.pack("<Q", value))

    def i64(self, value: int) -> None:
        self._chunks.append(struct.pack("<q", value))

    def f64(self, value: float) -> None:
        self._chunks.append(struct.pack("<d", value))

    def raw(self, data: bytes) -> None:
        self._chunks.append(data)

    def blob(self, data: bytes) -> None:
        """Length-prefixed bytes."""
        self.u64(len(data))
        self._chunks.append(data)

    def text(self, value: str) -> None:
        self.blob(value.encode("utf-8"))

    def array(self, values: np.ndarray, dtype: str) -> None:
        """Raw array body in C order; the caller writes the shape."""
        self._chunks.append(np.ascontiguousarray(values, dtype=dtype).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class BinaryReader:
    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self._offset = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._offset

    def _take(self, size: int, section: str) -> memoryview:
        if size > self.remaining:
            raise CheckpointFormatError(f"file truncated: needed {size} bytes, {self.remaining} left", section)
        chunk = self._data[self._offset:self._offset + size]
        self._offset += size
        return chunk

    def _unpack(self, fmt: str, section: str) -> Any:
        return struct.unpack(fmt, self._take(struct.calcsize(fmt), section))[0]

    def u32(self, section: str) -> int:
        return self._unpack("<I", section)

    def u64(self, section: str) -> int:
        return self._unpack("<Q", section)

    def i64(self, section: str) -> int:
        return self._unpack("<q", section)

    def f64(self, section: str) -> float:
        return self._unpack("<d", section)

    def raw(self, size: int, section: str) -> bytes:
        return bytes(self._take(size, section))

    def blob(self, section: str) -> bytes:
        return self.raw(self.u64(section), section)

    def text(self, section: str) -> str:
        try:
            return self.blob(section).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointFormatError(f"invalid UTF-8 text: {e}", section) from e

    def array(self, dtype: str, shape: tuple[int, ...], section: str) -> np.ndarray:
        item = np.dtype(dtype)
        count = int(np.prod(shape, dtype=np.int64))
        chunk = self._take(count * item.itemsize, section)
        native = item.newbyteorder("=")
        return np.frombuffer(chunk, dtype=item, count=count).astype(native).reshape(shape)

    def expect_end(self) -> None:
        if self.remaining:
            raise CheckpointFormatError(f"{self.remaining} unexpected trailing bytes", "trailer")


class BinaryCodec(Generic[ArtifactType]):
    """
    Encode/decode one artifact type.

    Subclasses set `magic`, `version` and `kind` and implement
    `encode_body` / `decode_body`.
    """

    magic: bytes = b""
    version: int = 1
    kind: str = "artifact"

    def encode_body(self, obj: ArtifactType, writer: BinaryWriter) -> None:
        raise NotImplementedError

    def decode_body(self, reader: BinaryReader, **options) -> ArtifactType:
        raise NotImplementedError

    def dumps(self, obj: ArtifactType) -> bytes:
        writer = BinaryWriter()
        writer.raw(self.magic)
        writer.u32(self.version)
        self.encode_body(obj, writer)
        return writer.getvalue()

    def loads(self, data: bytes, **options) -> ArtifactType:
        """
        Decode a whole artifact.

        Raises:
            CheckpointFormatError: wrong magic, truncation or trailing bytes
            CheckpointVersionError: unsupported format version
        """
        reader = BinaryReader(data)
        magic = reader.raw(len(self.magic), "header")
        if magic != self.magic:
            raise CheckpointFormatError(f"not a {self.kind} file (bad magic {magic!r})", "header")
        version = reader.u32("header")
        if version != self.version:
            raise CheckpointVersionError(
                f"unsupported {self.kind} format version {version} (expected {self.version})", "header"
            )
        obj = self.decode_body(reader, **options)
        reader.expect_end()
        return obj

    def save(self, obj: ArtifactType, path: str | Path) -> Path:
        path = Path(path)
        data = self.dumps(obj)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as e:
            logger.error(f"Failed to write {self.kind} to {path}: {e}")
            raise DatasetIOError(f"cannot write {path}: {e}") from e
        logger.info(f"Wrote {self.kind} to {path} ({len(data)} bytes)")
        return path

    def load(self, path: str | Path, **options) -> ArtifactType:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as e:
            logger.error(f"Failed to read {self.kind} from {path}: {e}")
            raise DatasetIOError(f"cannot read {path}: {e}") from e
        return self.loads(data, **options)
