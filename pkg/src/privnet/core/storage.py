"""
Storage Layer
JSONL writer for raw replication records.
"""

import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

logger = logging.getLogger(__name__)


def _to_json(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class JSONLWriter:
    """Async JSONL writer; records are streamed as they arrive and sorted on close."""

    def __init__(self, output_dir: str, name: str):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.output_dir / f"{name}.jsonl"
        self.lock = asyncio.Lock()
        self.file_handle = None
        self.records: List[Dict[str, Any]] = []

    async def write_result(self, result: Dict[str, Any]):
        async with self.lock:
            if self.file_handle is None:
                self.file_handle = open(self.path, "w")
            self.records.append(result)
            self.file_handle.write(json.dumps(result, default=_to_json, sort_keys=True) + "\n")
            self.file_handle.flush()

    async def close(self):
        """Close the stream and rewrite the file in (cell, replication) order."""
        async with self.lock:
            if self.file_handle:
                self.file_handle.close()
                self.file_handle = None
            if self.records:
                ordered = sorted(self.records, key=lambda r: (r.get("cell", 0), r.get("replication", 0)))
                with open(self.path, "w") as f:
                    for record in ordered:
                        f.write(json.dumps(record, default=_to_json, sort_keys=True) + "\n")
                logger.info(f"Closed JSONL file: {self.path}")


class ResultLogger:
    """Result logger for one experiment run."""

    def __init__(self, jsonl_dir: str, experiment: str):
        self.jsonl_writer = JSONLWriter(jsonl_dir, experiment)

    @property
    def path(self) -> Path:
        return self.jsonl_writer.path

    async def log_result(self, result: Dict[str, Any]):
        await self.jsonl_writer.write_result(result)

    async def close(self):
        await self.jsonl_writer.close()


def read_results(path: str, status: Optional[str] = None) -> List[Dict[str, Any]]:
    """Load records written by JSONLWriter, optionally filtered by status."""
    records = []
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if line:
                record = json.loads(line)
                if status is None or record.get("status") == status:
                    records.append(record)
    return records
