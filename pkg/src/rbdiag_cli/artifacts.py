"""中间产物管理 — 记录流水线各阶段写出的文件及其 sha256"""

import hashlib
import json
import logging
from pathlib import Path

from rbdiag_cli.config import ARTIFACT_MANIFEST_FILE
from rbdiag_cli.errors import ArtifactIOError

logger = logging.getLogger(__name__)


def file_sha256(path: Path) -> str:
    """计算文件 sha256"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactStore:
    """管理输出目录下的产物清单 manifest.json（不含时间戳，保证重复运行逐字节一致）"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.manifest_path = self.output_dir / ARTIFACT_MANIFEST_FILE
        self._manifest: dict[str, dict] = {}

    def load(self) -> dict:
        """加载产物清单"""
        if self.manifest_path.exists():
            try:
                self._manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
            except (json.JSONDecodeError, OSError):
                logger.warning("⚠️  产物清单损坏，将重新构建。")
                self._manifest = {}
        return self._manifest

    def save(self) -> None:
        """保存产物清单"""
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            self.manifest_path.write_text(
                json.dumps(self._manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        except OSError as e:
            raise ArtifactIOError(f"无法写入产物清单 {self.manifest_path}: {e}") from e

    def path_for(self, name: str) -> Path:
        """输出目录下某个产物文件的路径"""
        return self.output_dir / name

    def record(self, stage: str, path: Path) -> dict:
        """登记某阶段写出的文件，返回清单条目"""
        path = Path(path)
        try:
            digest = file_sha256(path)
        except OSError as e:
            raise ArtifactIOError(f"无法读取产物 {path}: {e}", stage=stage) from e
        try:
            name = path.relative_to(self.output_dir).as_posix()
        except ValueError:
            name = path.name
        info = {"file": name, "sha256": digest}
        self._manifest[stage] = info
        logger.debug("💾 %s -> %s", stage, path)
        return info

    def get(self, stage: str) -> dict | None:
        """获取清单条目"""
        return self._manifest.get(stage)

    def verify(self, stage: str) -> bool:
        """检查已登记文件是否仍存在且 sha256 未变化"""
        info = self.get(stage)
        if info is None:
            return False
        path = self.output_dir / info["file"]
        return path.exists() and file_sha256(path) == info["sha256"]

    @property
    def count(self) -> int:
        return len(self._manifest)

    @property
    def manifest(self) -> dict:
        return self._manifest

    def clear(self) -> int:
        """删除清单，返回清除的条目数"""
        count = 0
        if self.manifest_path.exists():
            self.load()
            count = self.count
            self.manifest_path.unlink()
        self._manifest = {}
        return count
