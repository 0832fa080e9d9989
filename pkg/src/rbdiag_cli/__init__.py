"""rbdiag-cli — 视网膜母细胞瘤分割与分级 CLI 工具"""

__version__ = "0.1.1"
